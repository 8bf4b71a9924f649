"""Eisenstein series: direct summation, Fourier expansions and their extraction,
Rankin-Selberg sums, and the cut-off norm identity for PSL(2, Z)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, special

from . import _kernels as _k
from .gaussian import gauss_class_rep, gcoprime_many, gnorm
from .groups import GroupSpec, get_group
from .mobius import UpperHalfPoint
from .specfun import BesselOrder, bessel_k, completed_zeta, k_contour_many


class TailBoundError(RuntimeError):
    pass


class ExtractionError(RuntimeError):
    pass


@dataclass
class FourierExpansion:
    """delta y^s + phi y^{n-s} + sum_m coeffs[m] y^{n/2} K_{s-n/2}(2 pi |mu| y) e(<mu, x>)

    with mu = sum_i m_i omega_i^*.  The zero index never appears in coeffs.
    """

    s: complex
    n: int
    delta: complex = 1.0
    phi: complex = 0.0
    coeffs: dict[tuple[int, ...], complex] = field(default_factory=dict)
    cusp: int = 0
    kind: str = "eisenstein"
    dual_basis: np.ndarray | None = None

    def __post_init__(self):
        self.s = complex(self.s)
        if self.kind not in ("eisenstein", "cuspform", "noncuspidal"):
            raise ValueError(f"unknown expansion kind {self.kind!r}")
        zero = (0,) * self.n
        if zero in self.coeffs:
            raise ValueError("the zero index belongs to the constant term")
        for m in self.coeffs:
            if len(m) != self.n:
                raise ValueError(f"index {m} has wrong length for n={self.n}")
        if self.dual_basis is None:
            self.dual_basis = np.eye(self.n)

    @property
    def eigenvalue(self) -> complex:
        return self.s * (self.n - self.s)

    def mu(self, m) -> np.ndarray:
        return np.asarray(m, float) @ self.dual_basis

    def mu_norm(self, m) -> float:
        return float(np.linalg.norm(self.mu(m)))

    def index_range(self) -> int:
        return max((max(abs(t) for t in m) for m in self.coeffs), default=0)

    def covered_radius(self) -> float:
        """Largest X such that every mu with |mu| <= X has its index inside the stored box."""
        M = self.index_range()
        if M == 0:
            return 0.0
        # smallest |mu| over the boundary shell of the index box
        best = math.inf
        for m in _shell(self.n, M + 1):
            best = min(best, self.mu_norm(m))
        return best * (1 - 1e-12)

    def is_conjugate_symmetric(self, tol: float = 1e-8) -> bool:
        for m, v in self.coeffs.items():
            w = self.coeffs.get(tuple(-t for t in m))
            if w is None or abs(w - np.conj(v)) > tol * (1 + abs(v)):
                return False
        return True

    def constant_term(self, y):
        y = np.asarray(y, float)
        return self.delta * y**self.s + self.phi * y ** (self.n - self.s)


@dataclass
class EigenfunctionData:
    s: complex
    expansion: FourierExpansion
    eigenvalue: complex | None = None
    note: str = ""

    def __post_init__(self):
        lam = self.s * (self.expansion.n - self.s)
        if self.eigenvalue is None:
            self.eigenvalue = lam
        elif abs(self.eigenvalue - lam) > 1e-8 * (1 + abs(lam)):
            raise ValueError(f"eigenvalue {self.eigenvalue} inconsistent with s={self.s} (expected {lam})")


def _shell(n: int, M: int) -> Iterable[tuple[int, ...]]:
    import itertools

    for m in itertools.product(range(-M, M + 1), repeat=n):
        if max(abs(t) for t in m) == M:
            yield m


# -- direct summation ------------------------------------------------------------


@dataclass
class EisensteinValue:
    value: complex
    tail_bound: float
    c_max: float


def _outer_square_integral(p: complex, L: float, n: int) -> complex:
    """int over |t|_inf > L of |t|^{-p} dt in R^n (n = 1, 2)."""
    if n == 1:
        return 2.0 * L ** (1 - p) / (p - 1)
    f_re = lambda th: (np.cos(th) ** (p - 2)).real
    f_im = lambda th: (np.cos(th) ** (p - 2)).imag
    ang = integrate.quad(f_re, 0, np.pi / 4, epsabs=1e-15)[0] + 1j * integrate.quad(f_im, 0, np.pi / 4, epsabs=1e-15)[0]
    return 8.0 * L ** (2 - p) / (p - 2) * ang


class PeriodizedKernel:
    """h(v) = sum_{lambda in Z^n} (|v + lambda|^2 + y^2)^{-s} for v in R^n.

    Direct sum over the box |lambda|_inf <= K plus an expansion of the far
    field that includes the midpoint-rule (Laplacian) correction.
    """

    def __init__(self, s: complex, y: float, n: int, K: int = 20):
        self.s, self.y, self.n, self.K = complex(s), float(y), n, K
        L = K + 0.5
        self.I0 = _outer_square_integral(2 * self.s, L, n)
        self.I1 = _outer_square_integral(2 * self.s + 2, L, n)
        rng = np.arange(-K, K + 1, dtype=float)
        if n == 1:
            self.lattice = rng[:, None]
        else:
            g = np.stack(np.meshgrid(rng, rng, indexing="ij"), axis=-1).reshape(-1, 2)
            self.lattice = g
        self.real_s = abs(self.s.imag) < 1e-300

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, float).reshape(-1, self.n)
        v = v - np.floor(v + 0.5)
        s, y, n = self.s, self.y, self.n
        out = np.zeros(len(v), dtype=float if self.real_s else complex)
        chunk = max(1, 200_000 // len(self.lattice))
        for i in range(0, len(v), chunk):
            w = v[i : i + chunk, None, :] + self.lattice[None, :, :]
            r = np.sum(w * w, axis=-1) + y * y
            if self.real_s:
                out[i : i + chunk] = np.sum(r ** (-s.real), axis=1)
            else:
                out[i : i + chunk] = np.sum(np.exp(-s * np.log(r)), axis=1)
        u2 = np.sum(v * v, axis=1)
        far = self.I0 + (-s * (u2 + y * y) + 2 * s * (s + 1) * u2 / n - s * (2 * s + 2 - n) / 12.0) * self.I1
        return out + (far.real if self.real_s else far)

    def total(self, v: np.ndarray) -> complex:
        """Sum of h over the rows of v (compiled)."""
        v = np.ascontiguousarray(np.asarray(v, float).reshape(-1, self.n))
        if self.real_s:
            return complex(_k.periodized_sum_real(v, self.y, self.s.real, self.K, self.I0.real, self.I1.real))
        return complex(_k.periodized_sum(v, self.y, self.s, self.K, complex(self.I0), complex(self.I1)))


def _tail_bound(n: int, sigma: float, y: float, C: float) -> float:
    """Bound for the summands of Gamma_inf \\ Gamma with |c| > C (lattice majorant)."""
    A = math.pi ** (n / 2) * math.gamma(sigma - n / 2) / math.gamma(sigma) * y ** (n - 2 * sigma)
    B = 3.0**n * y ** (-2 * sigma)

    def lattice_tail(p):  # sum over classes of c with |c| > C of |c|^{-p}
        if n == 1:
            return C ** (1 - p) / (p - 1)
        r0 = max(C - 0.7072, 1e-9)
        return 0.25 * (1 + 0.7072 / C) ** p * 2 * math.pi * r0 ** (2 - p) / (p - 2)

    return y**sigma * (A * lattice_tail(2 * sigma - n) + B * lattice_tail(2 * sigma))


def choose_c_max(n: int, sigma: float, y: float, tail_tol: float, cap: float) -> float:
    C = 4.0
    while _tail_bound(n, sigma, y, C) > tail_tol:
        C *= 1.25
        if C > cap:
            raise TailBoundError(f"tail tolerance {tail_tol} needs |c| beyond {cap}")
    return C


def eisenstein_direct(G: GroupSpec, k: int, P: UpperHalfPoint, s: complex, tail_tol: float = 1e-7,
                      c_cap: float = 20_000, K: int | None = None) -> EisensteinValue:
    """sum over Gamma_eta \\ Gamma of y_{A_k M(P)}^s, truncated at |c| <= c_max.

    Supported for the built-in groups at the cusp at infinity.
    """
    s = complex(s)
    if G.arithmetic is None or k != 0:
        raise NotImplementedError("direct summation is implemented for the built-in groups at infinity")
    n = G.n
    if s.real <= n:
        raise ValueError(f"direct sum needs Re s > {n}")
    x, y = np.asarray(P.x, float), P.y
    C = choose_c_max(n, s.real, y, tail_tol, c_cap)
    if K is None:
        # the far-field expansion of the periodized kernel needs K well above y
        K = max(20 if n == 1 else 8, int(math.ceil(8 * y)))
    ker = PeriodizedKernel(s, y, n, K)
    ys = y**s
    total = ys  # the identity coset
    if G.arithmetic == "Z":
        for c in range(1, int(C) + 1):
            d0 = np.arange(c)
            d0 = d0[np.gcd(d0, c) == 1]
            v = (x[0] + d0 / c)[:, None]
            total += c ** (-2 * s) * ys * ker.total(v)
    else:
        Ci = int(C)
        for a in range(0, Ci + 1):
            for b in range(0, Ci + 1):
                cz = (a, b)
                n2 = gnorm(cz)
                if n2 == 0 or n2 > C * C or gauss_class_rep(cz) != cz:
                    continue
                cc = complex(a, b)
                res = _gauss_residues(cz)
                w = res / cc  # d0 / c
                v = np.stack([x[0] + w.real, x[1] + w.imag], axis=1)
                total += n2 ** (-s) * ys * ker.total(v)
    return EisensteinValue(complex(total), _tail_bound(n, s.real, y, C), C)


@lru_cache(maxsize=4096)
def _gauss_residues_cached(a: int, b: int) -> np.ndarray:
    # Gaussian d with d / c in [0, 1)^2 and gcd(c, d) = 1
    cc = complex(a, b)
    R = int(math.ceil(abs(cc) * math.sqrt(2))) + 1
    p, q = np.meshgrid(np.arange(-R, R + 1), np.arange(-R, R + 1), indexing="ij")
    p, q = p.ravel(), q.ravel()
    w = (p + 1j * q) / cc
    eps = 1e-9 / abs(cc)
    keep = (w.real >= -eps) & (w.real < 1 - eps) & (w.imag >= -eps) & (w.imag < 1 - eps)
    p, q = p[keep], q[keep]
    ok = gcoprime_many((a, b), p, q)
    return p[ok] + 1j * q[ok]


def _gauss_residues(c) -> np.ndarray:
    return _gauss_residues_cached(*c)


def eisenstein_coprime_bruteforce(z: complex, s: float, N: int = 3000) -> float:
    """PSL(2, Z) Eisenstein series by brute force over coprime (c, d) with |c|, |d| <= N.

    Pairs are counted once per sign class; the part of the plane outside the
    square is replaced by its integral against the coprime density 6/pi^2.
    """
    x, y = z.real, z.imag
    total = 0.0
    d = np.arange(-N, N + 1)
    for c in range(0, N + 1):
        if c == 0:
            total += y**s
            continue
        dd = d[np.gcd(c, d) == 1]
        total += np.sum((y / ((c * x + dd) ** 2 + (c * y) ** 2)) ** s)
    # outside the square: y^s / |c z + d|^{2s} ~ y^s |(c, d) M|^{-2s}
    tail = _outside_square_tail(x, y, s, N)
    return float(total + tail)


def _outside_square_tail(x: float, y: float, s: float, N: int) -> float:
    # (c, d) -> (c y, c x + d) has Jacobian y; integrate r^{-2s} over the image
    # of the half plane c > 0 outside the square, with density 6/pi^2
    def radial(theta):
        c_dir, d_dir = math.cos(theta), math.sin(theta)
        # the square |c|, |d| <= N + 1/2 is left at r = (N + 1/2) / max(|c|, |d|)
        r0 = (N + 0.5) / max(abs(c_dir), abs(d_dir))
        q = (c_dir * y) ** 2 + (c_dir * x + d_dir) ** 2
        return r0 ** (2 - 2 * s) / (2 * s - 2) * q ** (-s)

    val = integrate.quad(radial, 0, math.pi, limit=200, epsabs=1e-16)[0]
    return 6.0 / math.pi**2 * y**s * val


# -- scattering and closed-form coefficients for PSL(2, Z) ----------------------


def scattering_phi_n1(s: complex) -> complex:
    """phi(s) = xi(2s - 1) / xi(2s)."""
    s = complex(s)
    return completed_zeta(2 * s - 1) / completed_zeta(2 * s)


def divisor_sigma(m: int, a: complex) -> complex:
    m = abs(int(m))
    tot = 0j
    for dv in range(1, int(math.isqrt(m)) + 1):
        if m % dv == 0:
            tot += dv**a
            other = m // dv
            if other != dv:
                tot += other**a
    return tot


def eisenstein_expansion_n1(s: complex, m_max: int) -> FourierExpansion:
    """Expansion of the PSL(2, Z) Eisenstein series from the classical divisor-sum formula.

    a_m = 2 |m|^{s - 1/2} sigma_{1 - 2s}(|m|) / xi(2s).  At s = 1/2 the
    series vanishes identically.
    """
    s = complex(s)
    if abs(s - 0.5) < 1e-14:
        return FourierExpansion(s, 1, 1.0, -1.0, {(m,): 0j for m in range(-m_max, m_max + 1) if m})
    xi2 = completed_zeta(2 * s)
    coeffs = {}
    for m in range(1, m_max + 1):
        a = 2.0 * m ** (s - 0.5) * divisor_sigma(m, 1 - 2 * s) / xi2
        coeffs[(m,)] = a
        coeffs[(-m,)] = a
    return FourierExpansion(s, 1, 1.0, scattering_phi_n1(s), coeffs)


# -- evaluation of expansions ----------------------------------------------------


def _radial_factor(order: BesselOrder, n: int, mu: float, y: np.ndarray) -> np.ndarray:
    arg = 2 * math.pi * mu * np.asarray(y, float)
    kv = k_values(order, arg)
    return np.asarray(y, float) ** (n / 2.0) * kv


def k_values(order: BesselOrder, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, float)
    if order.kind == "real":
        return special.kv(order.value.real, x)
    vals = k_contour_many(order.nu, x.ravel()).reshape(x.shape)
    return vals.real if order.kind == "imaginary" else vals


def synthesize(expansion: FourierExpansion, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Evaluate the expansion at points (X[i], Y[i])."""
    n = expansion.n
    X = np.asarray(X, float).reshape(-1, n)
    Y = np.asarray(Y, float).ravel()
    order = BesselOrder.from_spectral(expansion.s, n)
    out = expansion.constant_term(Y).astype(complex)
    uy, inv = np.unique(Y, return_inverse=True)
    for m, a in expansion.coeffs.items():
        if a == 0:
            continue
        mu = expansion.mu(m)
        rad = _radial_factor(order, n, float(np.linalg.norm(mu)), uy)[inv]
        out += a * rad * np.exp(2j * math.pi * (X @ mu))
    return out


class ExpansionEvaluator:
    """Fast evaluation for points with y >= y_min using Chebyshev tables of
    exp(2 pi |mu| y) y^{n/2} K_{s-n/2}(2 pi |mu| y)."""

    def __init__(self, expansion: FourierExpansion, y_min: float, y_max: float = 12.0, degree: int = 48,
                 tol: float = 1e-17):
        self.expansion = expansion
        self.y_min, self.y_max = y_min, y_max
        n = expansion.n
        order = BesselOrder.from_spectral(expansion.s, n)
        self.terms = []
        nodes = np.cos(np.pi * (np.arange(degree) + 0.5) / degree)
        ygrid = 0.5 * (y_max + y_min) + 0.5 * (y_max - y_min) * nodes
        scale = max(1.0, max((abs(a) for a in expansion.coeffs.values()), default=1.0))
        for m, a in expansion.coeffs.items():
            if a == 0:
                continue
            mu = expansion.mu(m)
            mn = float(np.linalg.norm(mu))
            # drop terms that are negligible on the whole range
            if abs(a) * math.exp(-2 * math.pi * mn * y_min) * 10 < tol * scale * 1e-3:
                continue
            vals = _radial_factor(order, n, mn, ygrid) * np.exp(2 * math.pi * mn * ygrid)
            cheb_re = np.polynomial.chebyshev.chebfit(nodes, np.real(vals), degree - 1)
            cheb_im = np.polynomial.chebyshev.chebfit(nodes, np.imag(vals), degree - 1)
            self.terms.append((a, mu, mn, cheb_re + 1j * cheb_im))

    def __call__(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        n = self.expansion.n
        X = np.asarray(X, float).reshape(-1, n)
        Y = np.asarray(Y, float).ravel()
        if np.any(Y < self.y_min * (1 - 1e-12)):
            raise ValueError("point below the tabulated height range")
        out = self.expansion.constant_term(Y).astype(complex)
        t = (2 * np.clip(Y, None, self.y_max) - (self.y_max + self.y_min)) / (self.y_max - self.y_min)
        high = Y > self.y_max
        for a, mu, mn, cheb in self.terms:
            rad = np.polynomial.chebyshev.chebval(t, cheb) * np.exp(-2 * math.pi * mn * Y)
            if np.any(high):
                rad = np.where(high, 0.0, rad)  # below exp(-2 pi y_max) relative
            out += a * rad * np.exp(2j * math.pi * (X @ mu))
        return out


# -- extraction ------------------------------------------------------------------


def fourier_extract(G: GroupSpec, evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray], s: complex,
                    y_probe: float | tuple[float, float], m_max: int, k: int = 0,
                    points_per_axis: int | None = None) -> FourierExpansion:
    """Recover delta, phi and a_mu (|m_i| <= m_max) from samples of a periodic function.

    evaluator(X, Y) takes X of shape (N, n) and returns N values.  The
    trapezoid rule on the lattice cell is exact for trigonometric polynomials
    up to the grid's Nyquist index.
    """
    s = complex(s)
    n = G.n
    if isinstance(y_probe, (tuple, list)):
        y1, y2 = y_probe
    else:
        y1, y2 = float(y_probe), 1.6 * float(y_probe)
    Np = points_per_axis or max(2 * (2 * m_max + 1), 16)
    cusp = G.cusps[k]
    order = BesselOrder.from_spectral(s, n)
    grids = np.meshgrid(*([np.arange(Np) / Np] * n), indexing="ij")
    U = np.stack([g.ravel() for g in grids], axis=1)  # lattice coordinates
    X = U @ cusp.basis

    def transform(yv):
        vals = np.asarray(evaluator(X, np.full(len(X), yv)), complex).reshape((Np,) * n)
        return np.fft.fftn(vals) / Np**n  # coefficient of e(<m, u>)

    F1 = transform(y1)
    F2 = transform(y2)
    # constant term: c0(y) = delta y^s + phi y^{n-s}
    Amat = np.array([[y1**s, y1 ** (n - s)], [y2**s, y2 ** (n - s)]])
    delta, phi = np.linalg.solve(Amat, np.array([F1[(0,) * n], F2[(0,) * n]]))
    import itertools

    coeffs = {}
    for m in itertools.product(range(-m_max, m_max + 1), repeat=n):
        if not any(m):
            continue
        mu = np.asarray(m, float) @ cusp.dual
        mn = float(np.linalg.norm(mu))
        kv = complex(bessel_k(order, 2 * math.pi * mn * y1))
        if abs(kv) < 1e-300:
            raise ExtractionError(f"K-value underflow for m={m} at y={y1}")
        coeffs[m] = complex(F1[tuple(t % Np for t in m)]) / (y1 ** (n / 2.0) * kv)
    return FourierExpansion(s, n, complex(delta), complex(phi), coeffs, cusp=k, dual_basis=cusp.dual)


# -- Rankin-Selberg --------------------------------------------------------------


def rankin_selberg_sum(expansion: FourierExpansion, X: float) -> float:
    if X > expansion.covered_radius() + 1e-12:
        raise ValueError(f"coefficients only cover |mu| <= {expansion.covered_radius():.4g}, asked for {X}")
    tot = 0.0
    for m, a in expansion.coeffs.items():
        if expansion.mu_norm(m) <= X + 1e-12:
            tot += abs(a) ** 2
    return float(tot)


def rankin_selberg_profile(expansion: FourierExpansion, X_grid) -> np.ndarray:
    norms = np.array([expansion.mu_norm(m) for m in expansion.coeffs])
    weights = np.array([abs(a) ** 2 for a in expansion.coeffs.values()])
    order = np.argsort(norms)
    cum = np.cumsum(weights[order])
    out = []
    for X in X_grid:
        if X > expansion.covered_radius() + 1e-12:
            raise ValueError(f"coefficients only cover |mu| <= {expansion.covered_radius():.4g}")
        idx = np.searchsorted(norms[order], X + 1e-12, side="right")
        out.append(cum[idx - 1] if idx else 0.0)
    return np.array(out)


def strong_rankin_selberg_envelope(T: float, X: float, n: int, W: float) -> float:
    logp = max(0.0, math.log(X / (T + 1) + T)) if X / (T + 1) + T > 0 else 0.0
    return math.exp(math.pi * T) * (T + X**n / (T + 1) ** (n - 1)) * (logp + W)


# -- cut-off Eisenstein series and the Maass-Selberg identity ---------------------


@dataclass
class MaassSelbergResult:
    lhs: float
    rhs: float
    residual: float


def maass_selberg_rhs_n1(s: complex, B: float) -> float:
    s = complex(s)
    sb = s.conjugate()
    phi = scattering_phi_n1(s)
    term1 = (B ** (s + sb - 1) - abs(phi) ** 2 * B ** (1 - s - sb)) / (s + sb - 1)
    term2 = (np.conj(phi) * B ** (s - sb) - phi * B ** (sb - s)) / (s - sb)
    val = term1 + term2
    return float(val.real)


def cutoff_norm_n1(s: complex, B: float, resolution: int = 400, m_max: int = 14, y_top: float | None = None) -> float:
    """int over the standard domain of |E^B(P, s)|^2 dnu by Gauss-Legendre quadrature."""
    s = complex(s)
    exp = eisenstein_expansion_n1(s, m_max)
    y_min = math.sqrt(3) / 2
    if y_top is None:
        y_top = B + 8.0
    ev = ExpansionEvaluator(exp, y_min * (1 - 1e-9), y_max=y_top + 1.0)
    gx, wx = np.polynomial.legendre.leggauss(resolution)
    gy, wy = np.polynomial.legendre.leggauss(resolution)
    # x in [0, 1/2]; the integrand is even in x
    xs = 0.25 * (gx + 1)
    wxs = 0.25 * wx
    total = 0.0
    for xi, wxi in zip(xs, wxs):
        lo = math.sqrt(1 - xi * xi)
        # lower piece [lo, B]: full E; upper piece [B, y_top]: E minus constant term
        for a, b, cut in ((lo, B, False), (B, y_top, True)):
            yy = 0.5 * (b - a) * (gy + 1) + a
            ww = 0.5 * (b - a) * wy
            vals = ev(np.full(len(yy), xi), yy)
            if cut:
                vals = vals - exp.constant_term(yy)
            total += 2 * wxi * np.sum(ww * np.abs(vals) ** 2 / yy**2)
    return float(total)


def maass_selberg_check_n1(s: complex, B: float, resolution: int = 400) -> MaassSelbergResult:
    s = complex(s)
    if s.real <= 0.5 or abs(s.imag) < 1e-12:
        raise ValueError("need Re s > 1/2 and s not real")
    if B < get_group("psl2z").B0:
        raise ValueError("B must be at least B0")
    lhs = cutoff_norm_n1(s, B, resolution)
    rhs = maass_selberg_rhs_n1(s, B)
    return MaassSelbergResult(lhs, rhs, abs(lhs - rhs) / abs(rhs))


def critical_cutoff_norm_n1(T: float, B: float, sigmas=(1e-3, 2e-3)) -> float:
    """Limit of the closed form as sigma -> 1/2 from the right, by Richardson extrapolation."""
    v1 = maass_selberg_rhs_n1(0.5 + sigmas[0] + 1j * T, B)
    v2 = maass_selberg_rhs_n1(0.5 + sigmas[1] + 1j * T, B)
    r = sigmas[1] / sigmas[0]
    return (r * v1 - v2) / (r - 1)


# -- coefficient files -----------------------------------------------------------
#
#   # kind=eisenstein
#   # s_re=0.5 s_im=9.5336952613
#   # n=1
#   # lambda=...            optional, must equal s (n - s)
#   # phi_re=... phi_im=... optional constant-term data
#   # delta=1               optional
#   m1 ... mn re im


def write_coefficients(path: str, expansion: FourierExpansion, lam: complex | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(f"# kind={expansion.kind}\n")
        fh.write(f"# s_re={expansion.s.real!r} s_im={expansion.s.imag!r}\n")
        fh.write(f"# n={expansion.n}\n")
        if lam is not None:
            fh.write(f"# lambda_re={complex(lam).real!r} lambda_im={complex(lam).imag!r}\n")
        ph = complex(expansion.phi)
        fh.write(f"# phi_re={ph.real!r} phi_im={ph.imag!r}\n")
        fh.write(f"# delta={complex(expansion.delta).real!r}\n")
        for m in sorted(expansion.coeffs):
            a = complex(expansion.coeffs[m])
            fh.write(" ".join(str(t) for t in m) + f" {a.real!r} {a.imag!r}\n")


def ingest_coefficients(path: str) -> FourierExpansion:
    header: dict[str, str] = {}
    body: list[tuple[int, str]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        header[k.strip()] = v.strip()
                continue
            body.append((lineno, line.split("#", 1)[0]))
    try:
        kind = header.get("kind", "eisenstein")
        s = complex(float(header["s_re"]), float(header.get("s_im", "0")))
        n = int(header["n"])
    except KeyError as exc:
        raise ValueError(f"{path}: missing header field {exc}") from None
    except ValueError as exc:
        raise ValueError(f"{path}: bad header value ({exc})") from None
    coeffs: dict[tuple[int, ...], complex] = {}
    for lineno, line in body:
        toks = line.split()
        if len(toks) != n + 2:
            raise ValueError(f"{path}:{lineno}: expected {n} indices and 2 values, got {len(toks)} fields")
        try:
            m = tuple(int(t) for t in toks[:n])
            v = complex(float(toks[n]), float(toks[n + 1]))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        if not any(m):
            raise ValueError(f"{path}:{lineno}: the zero index is reserved for the constant term")
        if m in coeffs:
            raise ValueError(f"{path}:{lineno}: duplicate index {m}")
        coeffs[m] = v
    phi = complex(float(header.get("phi_re", "0")), float(header.get("phi_im", "0")))
    delta = float(header.get("delta", "1" if kind == "eisenstein" else "0"))
    exp = FourierExpansion(s, n, delta, phi, coeffs, kind=kind)
    if "lambda_re" in header or "lambda" in header:
        lam = complex(float(header.get("lambda_re", header.get("lambda", "0"))), float(header.get("lambda_im", "0")))
        EigenfunctionData(s, exp, lam)  # raises on mismatch
    return exp
