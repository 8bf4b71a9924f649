"""Horosphere integrals against cutoff functions, Gamma-invariant test functions,
equidistribution-rate experiments and the cusp-escape demonstration."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from . import _kernels
from .automorphic import ExpansionEvaluator, FourierExpansion, k_values
from .gaussian import complete_sl2_gauss, complete_sl2_int, gcoprime_many
from .groups import GroupSpec, invariant_height_arrays, reduce_arrays
from .specfun import BesselOrder

CUTOFF_KINDS = ("bump", "box", "mollified")
REFINE_TOL = 1e-7
REFINE_CAP = 3
REFINE_ATOL = 1e-12  # absolute floor for integrals that vanish
DEFAULT_Q = 64.0  # midpoint samples per unit of hyperbolic length
CHUNK = 1 << 20


class QuadratureError(RuntimeError):
    pass


class FitError(RuntimeError):
    pass


# -- one-dimensional profiles -----------------------------------------------------


def bump(x):
    """exp(1 - 1/(1 - (2x)^2)) on |x| < 1/2, zero elsewhere."""
    x = np.asarray(x, float)
    t = 1.0 - (2.0 * x) ** 2
    out = np.zeros_like(x)
    inside = t > 0
    out[inside] = np.exp(1.0 - 1.0 / t[inside])
    return out


@lru_cache(maxsize=1)
def bump_mass() -> float:
    return integrate.quad(lambda x: float(bump(np.array(x))), -0.5, 0.5, epsabs=1e-14, epsrel=1e-13)[0]


def bump_hat(xi) -> np.ndarray:
    """Fourier transform of the bump, int bump(x) e^{-2 pi i xi x} dx (real, even)."""
    xi = np.abs(np.asarray(xi, float))
    flat = xi.ravel()
    out = np.empty_like(flat)
    if flat.size == 0:
        return out.reshape(xi.shape)
    # the node count follows the oscillation; sort so each block uses a fitting rule
    order = np.argsort(flat)
    start = 0
    while start < len(order):
        top = flat[order[start]]
        limit = max(2.0 * top, top + 8.0)
        stop = start + int(np.searchsorted(flat[order[start:]], limit, side="right"))
        stop = max(stop, start + 1)
        block = order[start:stop]
        N = int(160 + 6 * flat[block].max())
        g, w = _gl(N)
        x = 0.25 * (g + 1.0)  # [0, 1/2]
        wx = 0.25 * w
        vals = bump(x) * wx
        out[block] = 2.0 * np.cos(2.0 * np.pi * np.outer(flat[block], x)) @ vals
        start = stop
    return out.reshape(xi.shape)


@lru_cache(maxsize=64)
def _gl(N: int):
    return np.polynomial.legendre.leggauss(N)


@lru_cache(maxsize=1)
def _mollifier_cdf() -> CubicSpline:
    # psi_1(t) = bump(t / 2) / (2 m) on [-1, 1], mass 1; cumulative on a fine grid
    t = np.linspace(-1.0, 1.0, 40001)
    dens = bump(t / 2.0) / (2.0 * bump_mass())
    cum = integrate.cumulative_simpson(dens, x=t, initial=0.0)
    cum /= cum[-1]
    return CubicSpline(t, cum)


def mollifier_density(t, width: float):
    """psi_h in one variable: support [-width, width], mass 1."""
    t = np.asarray(t, float)
    return bump(t / (2.0 * width)) / (2.0 * width * bump_mass())


def mollified_box(x, width: float):
    """1_{[-1/2, 1/2]} * psi_h with psi_h supported in [-width, width]."""
    x = np.asarray(x, float)
    cdf = _mollifier_cdf()

    def G(z):
        z = np.clip(z, -1.0, 1.0)
        return cdf(z)

    return G((x + 0.5) / width) - G((x - 0.5) / width)


def box(x):
    x = np.asarray(x, float)
    return (np.abs(x) <= 0.5).astype(float)


# -- cutoffs ----------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffSpec:
    """chi_{delta, gamma}(u) = chi((u - gamma) / delta) with chi a product of 1D profiles."""

    kind: str
    delta: tuple[float, ...]
    gamma: tuple[float, ...]
    h: float | None = None

    def __post_init__(self):
        if self.kind not in CUTOFF_KINDS:
            raise ValueError(f"cutoff kind must be one of {CUTOFF_KINDS}")
        d = tuple(float(t) for t in np.atleast_1d(self.delta))
        g = tuple(float(t) for t in np.atleast_1d(self.gamma))
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "gamma", g)
        if len(d) != len(g):
            raise ValueError("delta and gamma need the same length")
        if not all(0 < t <= 1 for t in d):
            raise ValueError("each delta_i must lie in (0, 1]")
        if self.kind == "mollified":
            if self.h is None or not 0 < self.h < 1:
                raise ValueError("mollified cutoff needs h in (0, 1)")

    @property
    def n(self) -> int:
        return len(self.delta)

    @property
    def delta_min(self) -> float:
        return min(self.delta)

    @property
    def width(self) -> float:
        # mollifier support projected to an axis; the product support sits in the unit ball
        return self.h / math.sqrt(self.n) if self.kind == "mollified" else 0.0

    @property
    def half_support(self) -> float:
        return 0.5 + self.width

    def profile_1d(self, x):
        if self.kind == "bump":
            return bump(x)
        if self.kind == "box":
            return box(x)
        return mollified_box(x, self.width)

    def profile_hat_1d(self, xi):
        xi = np.asarray(xi, float)
        if self.kind == "bump":
            return bump_hat(xi)
        sinc = np.sinc(xi)  # sin(pi xi) / (pi xi)
        if self.kind == "box":
            return sinc
        return sinc * bump_hat(2.0 * self.width * xi) / bump_mass()

    @property
    def mass(self) -> float:
        """<chi> = int chi."""
        per_axis = bump_mass() if self.kind == "bump" else 1.0
        return per_axis**self.n

    def chi(self, U: np.ndarray) -> np.ndarray:
        """chi_{delta, gamma} at rows of U."""
        U = np.atleast_2d(np.asarray(U, float))
        out = np.ones(len(U))
        for i in range(self.n):
            out = out * self.profile_1d((U[:, i] - self.gamma[i]) / self.delta[i])
        return out

    def describe(self) -> dict:
        d = {"kind": self.kind, "delta": list(self.delta), "gamma": list(self.gamma)}
        if self.h is not None:
            d["h"] = self.h
        return d


def periodize(cutoff: CutoffSpec, u) -> np.ndarray:
    """Psi(u) = sum_m chi_{delta, gamma}(u + m)."""
    U = np.atleast_2d(np.asarray(u, float))
    out = np.ones(len(U))
    for i in range(cutoff.n):
        w = cutoff.delta[i] * cutoff.half_support
        lo = np.ceil(cutoff.gamma[i] - w - U[:, i]).min()
        hi = np.floor(cutoff.gamma[i] + w - U[:, i]).max()
        acc = np.zeros(len(U))
        for m in range(int(lo), int(hi) + 1):
            acc += cutoff.profile_1d((U[:, i] + m - cutoff.gamma[i]) / cutoff.delta[i])
        out = out * acc
    return out


def cutoff_fourier(cutoff: CutoffSpec, nu) -> complex | np.ndarray:
    """hat chi_{delta, gamma}(nu) = prod delta_i e^{-2 pi i <nu, gamma>} prod hat chi(delta_i nu_i)."""
    nu_arr = np.atleast_2d(np.asarray(nu, float))
    single = np.ndim(nu) <= 1
    d = np.array(cutoff.delta)
    g = np.array(cutoff.gamma)
    val = np.prod(d) * np.exp(-2j * np.pi * (nu_arr @ g))
    for i in range(cutoff.n):
        val = val * cutoff.profile_hat_1d(d[i] * nu_arr[:, i])
    return complex(val[0]) if single else val


def sobolev_norm(cutoff: CutoffSpec, m: int, points: int = 200001) -> float:
    """||chi||_{m,1} = sum_{|l| <= m} int |D^l chi| for the unscaled profile."""
    if cutoff.kind == "box" and m > 0:
        raise ValueError("the box cutoff has no derivatives in L^1")
    import itertools

    half = cutoff.half_support
    x = np.linspace(-half, half, points)
    f = cutoff.profile_1d(x)
    derivs = [f]
    for _ in range(m):
        derivs.append(np.gradient(derivs[-1], x, edge_order=2))
    l1 = [float(integrate.trapezoid(np.abs(dv), x)) for dv in derivs]
    total = 0.0
    for ell in itertools.product(range(m + 1), repeat=cutoff.n):
        if sum(ell) <= m:
            total += float(np.prod([l1[k] for k in ell]))
    return total


# -- test functions ---------------------------------------------------------------


@dataclass
class TestFunction:
    """A Gamma-invariant function given by a vectorized evaluator (X: (N, n), Y: (N,))."""

    __test__ = False  # not a pytest class

    kind: str
    group: GroupSpec
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    meta: dict = field(default_factory=dict)

    def __call__(self, X, Y) -> np.ndarray:
        X = np.asarray(X, float).reshape(-1, self.group.n)
        Y = np.asarray(Y, float).ravel()
        return self.evaluator(X, Y)

    def at(self, P) -> complex:
        v = self(np.asarray(P.x, float)[None, :], np.array([P.y]))[0]
        return v


def constant_function(G: GroupSpec, value: float = 1.0) -> TestFunction:
    return TestFunction("constant", G, lambda X, Y: np.full(len(Y), float(value)), {"value": value})


def _orbit_points(G: GroupSpec, Q0x: np.ndarray, Q0y: float, y_floor: float, x_reach: float) -> tuple[np.ndarray, np.ndarray]:
    """Orbit points of Q0 with height >= y_floor and |x| <= x_reach (built-ins)."""
    pts_x, pts_y = [], []
    if G.arithmetic == "Z":
        x0 = float(Q0x[0])
        cmax = int(math.floor(1.0 / math.sqrt(y_floor * Q0y)))
        for c in range(0, cmax + 1):
            if c == 0:
                cands = [(1, 0, 0, 1)]
            else:
                # |c x0 + d|^2 + c^2 y0^2 <= y0 / y_floor
                r2 = Q0y / y_floor - (c * Q0y) ** 2
                if r2 < 0:
                    continue
                r = math.sqrt(r2)
                cands = []
                for d in range(int(math.floor(-c * x0 - r)), int(math.ceil(-c * x0 + r)) + 1):
                    if math.gcd(c, d) != 1:
                        continue
                    a, b = complete_sl2_int(c, d)
                    cands.append((a, b, c, d))
            for a, b, c, d in cands:
                den = (c * x0 + d) ** 2 + (c * Q0y) ** 2
                yq = Q0y / den
                if yq < y_floor:
                    continue
                xq = ((a * x0 + b) * (c * x0 + d) + a * c * Q0y**2) / den
                shifts = np.arange(math.floor(-x_reach - xq), math.ceil(x_reach - xq) + 1)
                pts_x.extend((xq + shifts)[:, None])
                pts_y.extend([yq] * len(shifts))
    elif G.arithmetic == "Z[i]":
        z0 = complex(Q0x[0], Q0x[1])
        cmax = int(math.floor(1.0 / math.sqrt(y_floor * Q0y)))
        seen: set = set()
        for ca in range(-cmax, cmax + 1):
            for cb in range(-cmax, cmax + 1):
                c = complex(ca, cb)
                if abs(c) ** 2 * Q0y**2 > Q0y / y_floor:
                    continue
                if c == 0:
                    mats = [((1, 0), (0, 0), (0, 0), (1, 0))]
                else:
                    r2 = Q0y / y_floor - abs(c) ** 2 * Q0y**2
                    r = math.sqrt(r2)
                    ctr = -c * z0
                    p = np.arange(math.floor(ctr.real - r), math.ceil(ctr.real + r) + 1)
                    q = np.arange(math.floor(ctr.imag - r), math.ceil(ctr.imag + r) + 1)
                    P_, Qm = np.meshgrid(p, q, indexing="ij")
                    P_, Qm = P_.ravel(), Qm.ravel()
                    ok = gcoprime_many((ca, cb), P_, Qm)
                    mats = []
                    for dp, dq in zip(P_[ok], Qm[ok]):
                        d = (int(dp), int(dq))
                        a, b = complete_sl2_gauss((ca, cb), d)
                        mats.append((a, b, (ca, cb), d))
                for a, b, cc, d in mats:
                    a_, b_, c_, d_ = (complex(*a), complex(*b), complex(*cc), complex(*d))
                    den = abs(c_ * z0 + d_) ** 2 + abs(c_) ** 2 * Q0y**2
                    yq = Q0y / den
                    if yq < y_floor:
                        continue
                    zq = ((a_ * z0 + b_) * np.conj(c_ * z0 + d_) + a_ * np.conj(c_) * Q0y**2) / den
                    for sgn in (1, -1):
                        w = sgn * zq
                        for lx in range(math.floor(-x_reach - w.real), math.ceil(x_reach - w.real) + 1):
                            for ly in range(math.floor(-x_reach - w.imag), math.ceil(x_reach - w.imag) + 1):
                                pt = (w.real + lx, w.imag + ly)
                                key = (round(pt[0], 9), round(pt[1], 9), round(yq, 9))
                                if key in seen:
                                    continue
                                seen.add(key)
                                pts_x.append(np.array(pt))
                                pts_y.append(yq)
    else:
        raise NotImplementedError("orbit enumeration is implemented for the built-in groups")
    X = np.array(pts_x, float).reshape(-1, G.n)
    Y = np.array(pts_y, float)
    # duplicates (same point from different cosets of the stabilizer)
    keys = np.round(np.column_stack([X, Y]), 9)
    _, idx = np.unique(keys, axis=0, return_index=True)
    idx.sort()
    return X[idx], Y[idx]


def _domain_prism(G: GroupSpec):
    """A box-shaped superset of the standard fundamental domain: (lo, hi, y_min)."""
    if G.arithmetic == "Z":
        return np.array([-0.5]), np.array([0.5]), math.sqrt(3) / 2
    if G.arithmetic == "Z[i]":
        return np.array([-0.5, 0.0]), np.array([0.5, 0.5]), 1 / math.sqrt(2)
    raise NotImplementedError("fundamental-domain prism known only for the built-ins")


def _reaches(Cx, Cy, lo, hi, ymin, u0):
    """Centres whose u0-ball meets the box [lo, hi] x [ymin, inf)."""
    dx = np.maximum(0.0, np.maximum(lo - Cx, Cx - hi))
    d2 = np.sum(dx * dx, axis=1)
    # for fixed horizontal offset, u is minimised at y = sqrt(d2 + y_Q^2)
    ystar = np.maximum(np.sqrt(d2 + Cy * Cy), ymin)
    ustar = (d2 + (ystar - Cy) ** 2) / (2 * ystar * Cy)
    return ustar <= u0 * (1 + 1e-9)


def build_pointpair_test_function(G: GroupSpec, Q0, radius: float, profile: Callable | None = None) -> TestFunction:
    """f(P) = sum over the orbit of Q0 of psi(u(P, Q) / u0), u0 = cosh(radius) - 1.

    psi defaults to exp(1 - 1/(1 - t^2)) on [0, 1).  Evaluation reduces P into
    the fundamental domain and sums over the orbit points that can reach it.
    """
    Q0x = np.asarray(Q0.x, float)
    Q0y = float(Q0.y)
    u0 = math.cosh(radius) - 1.0
    lo, hi, ymin = _domain_prism(G)
    # heights of orbit points near the domain: y_Q >= y_min e^{-R}
    y_floor = ymin * math.exp(-radius)
    # orbit heights are bounded by the invariant height of Q0
    top = float(invariant_height_arrays(G, Q0x[None, :], np.array([Q0y]))[0])
    reach = 1.0 + top * math.exp(radius) * math.sinh(radius)
    Cx, Cy = _orbit_points(G, Q0x, Q0y, y_floor, reach)
    # keep centres within point-pair reach of the prism
    keep = _reaches(Cx, Cy, lo, hi, ymin, u0)
    Cx, Cy = np.ascontiguousarray(Cx[keep]), np.ascontiguousarray(Cy[keep])

    if profile is None:
        nb = np.full(G.n, 32 if G.n == 1 else 12, dtype=np.int64)
        width = (hi - lo) / nb
        starts, members = [0], []
        for cell in np.ndindex(*nb):
            blo = lo + width * np.array(cell)
            sel = np.nonzero(_reaches(Cx, Cy, blo, blo + width, ymin, u0))[0]
            members.extend(sel.tolist())
            starts.append(len(members))
        starts = np.array(starts, dtype=np.int64)
        members = np.array(members, dtype=np.int64)

        def evaluator(X, Y):
            Xr, Yr = reduce_arrays(G, X, Y)
            out = np.empty(len(Yr))
            _kernels.orbit_bump_sum_binned(np.ascontiguousarray(Xr), Yr, Cx, Cy, u0, lo, width, nb,
                                           starts, members, out)
            return out

        prof = lambda t: np.where(t < 1, np.exp(1 - 1 / np.maximum(1 - np.asarray(t, float) ** 2, 1e-300)), 0.0)
    else:
        prof = profile

        def evaluator(X, Y):
            Xr, Yr = reduce_arrays(G, X, Y)
            out = np.zeros(len(Yr))
            for cx, cy in zip(Cx, Cy):
                u = (np.sum((Xr - cx) ** 2, axis=1) + (Yr - cy) ** 2) / (2 * Yr * cy)
                out += np.where(u < u0, prof(np.minimum(u / u0, 1.0)), 0.0)
            return out

    # hyperbolic integral of psi(u / u0): omega_n int psi(u/u0) sinh^n(r) dr with u = cosh r - 1
    n = G.n
    sphere = 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)
    mass = sphere * integrate.quad(lambda r: float(prof(np.array([(math.cosh(r) - 1) / u0]))[0]) * math.sinh(r) ** n,
                                   0, radius, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    meta = {"Q0": (Q0x.tolist(), Q0y), "radius": radius, "u0": u0, "centers": len(Cy), "hyperbolic_mass": mass,
            "max_height": top * math.exp(radius)}
    return TestFunction("pointpair", G, evaluator, meta)


def eigen_test_function(G: GroupSpec, expansion: FourierExpansion) -> TestFunction:
    """Evaluate an automorphic expansion after reduction (heights >= the domain floor)."""
    _, _, ymin = _domain_prism(G)
    ev = ExpansionEvaluator(expansion, ymin * (1 - 1e-9))

    def evaluator(X, Y):
        Xr, Yr = reduce_arrays(G, X, Y)
        return ev(Xr, Yr)

    return TestFunction("eigen", G, evaluator, {"s": expansion.s})


# -- horosphere integral ------------------------------------------------------------


def _midpoint_axes(cutoff: CutoffSpec, y: float, q: float) -> list[tuple[np.ndarray, float]]:
    axes = []
    for i in range(cutoff.n):
        w = cutoff.delta[i] * cutoff.half_support
        lo, hi = cutoff.gamma[i] - w, cutoff.gamma[i] + w
        # q samples per unit of hyperbolic length, and at least q per delta-unit
        N = max(8, int(math.ceil(q * (hi - lo) / min(y, cutoff.delta[i]))))
        h = (hi - lo) / N
        axes.append((lo + h * (np.arange(N) + 0.5), h))
    return axes


def _horosphere_at(G: GroupSpec, f: TestFunction, cutoff: CutoffSpec, y: float, q: float) -> complex:
    axes = _midpoint_axes(cutoff, y, q)
    basis = G.cusps[0].basis
    n = cutoff.n
    dvol = float(np.prod([a[1] for a in axes]))
    # chunk over the first axis so memory stays bounded
    total = 0j
    if n == 1:
        u = axes[0][0]
        for s in range(0, len(u), CHUNK):
            U = u[s : s + CHUNK, None]
            X = U @ basis
            w = cutoff.chi(U)
            sel = w != 0
            if sel.any():
                total += np.sum(w[sel] * f(X[sel], np.full(sel.sum(), y)))
    else:
        u1, u2 = axes[0][0], axes[1][0]
        step = max(1, CHUNK // len(u2))
        for s in range(0, len(u1), step):
            A, B = np.meshgrid(u1[s : s + step], u2, indexing="ij")
            U = np.column_stack([A.ravel(), B.ravel()])
            X = U @ basis
            w = cutoff.chi(U)
            sel = w != 0
            if sel.any():
                total += np.sum(w[sel] * f(X[sel], np.full(sel.sum(), y)))
    return total * dvol / float(np.prod(cutoff.delta))


def horosphere_integral(G: GroupSpec, f: TestFunction, cutoff: CutoffSpec, y: float, q: float = DEFAULT_Q,
                        refine: bool = True, tol: float = REFINE_TOL,
                        atol: float = REFINE_ATOL) -> complex:
    """(1 / prod delta) int chi_{delta, gamma}(u) f(sum u_i omega_i + y i_n) du.

    Composite midpoint rule with q points per unit of hyperbolic length along
    each axis (never fewer than q per delta-unit); doubled until two values agree to tol relative (or atol absolute),
    at most REFINE_CAP times.
    """
    if not 0 < y < 1:
        raise ValueError("need 0 < y < 1")
    if cutoff.n != G.n:
        raise ValueError("cutoff dimension does not match the group")
    v = _horosphere_at(G, f, cutoff, y, q)
    if not refine:
        return complex(v)
    for _ in range(REFINE_CAP):
        q *= 2
        w = _horosphere_at(G, f, cutoff, y, q)
        change = abs(w - v)
        if change <= max(tol * abs(w), atol):
            return complex(w)
        v = w
    raise QuadratureError(f"horosphere quadrature not settled at y={y} (last change {change:.3g})")


def horosphere_termwise(expansion: FourierExpansion, cutoff: CutoffSpec, y: float, rel_tol: float = 1e-13) -> complex:
    """The same integral for f given by its Fourier expansion, summed term by term (n = 1)."""
    if expansion.n != 1:
        raise NotImplementedError("termwise route is implemented for n = 1")
    s = expansion.s
    order = BesselOrder.from_spectral(s, 1)
    vol = float(np.prod(cutoff.delta))
    const = expansion.constant_term(np.array([y]))[0] * cutoff_fourier(cutoff, [0.0])
    ms = np.array(sorted(m[0] for m in expansion.coeffs))
    if len(ms) == 0:
        return complex(const / vol)
    mu = np.abs(np.array([expansion.mu_norm((m,)) for m in ms]))
    a = np.array([expansion.coeffs[(m,)] for m in ms])
    hat = cutoff_fourier(cutoff, -ms[:, None].astype(float))
    scale = np.abs(hat) * np.abs(a)
    # skip terms whose cutoff transform is negligible; K is evaluated only where it matters
    live = scale > rel_tol * max(1e-300, float(scale.max()))
    kv = np.zeros(len(ms), complex)
    kv[live] = k_values(order, 2 * np.pi * mu[live] * y)
    series = np.sum(a * y**0.5 * kv * hat)
    return complex((const + series) / vol)


def termwise_index_range(cutoff: CutoffSpec, y: float, T: float, tol: float = 1e-14) -> int:
    """Largest |m| worth keeping: the cutoff transform or the K-decay must make the term negligible."""
    by_k = (T + 40.0) / (2 * np.pi * y)
    xi = np.arange(1, 20001) * cutoff.delta_min
    hat = np.abs(cutoff.profile_hat_1d(xi))
    ref = abs(cutoff.profile_hat_1d(np.array([0.0]))[0])
    small = np.nonzero(hat < tol * ref)[0]
    by_hat = np.inf
    if len(small):
        # first index after which the transform stays below tol
        big = np.nonzero(hat >= tol * ref)[0]
        last_big = big.max() if len(big) else 0
        by_hat = last_big + 2
    return int(min(by_k, by_hat)) + 1


# -- volume average -------------------------------------------------------------------


def _panel_rule(lo: float, hi: float, panels: int, order: int = 16):
    g, w = _gl(order)
    edges = np.linspace(lo, hi, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (b - a) * (g + 1) + a).ravel()
    wt = (0.5 * (b - a) * w).ravel()
    return x, wt


def _domain_integral(G: GroupSpec, f: TestFunction | None, quad_res: int) -> complex:
    """int over the standard domain of f dnu in t = 1/y (dnu = t^{n-1} dx dt)."""
    lo, hi, _ = _domain_prism(G)
    panels = max(1, quad_res // 16)
    n = G.n
    axes = [_panel_rule(l, h, panels) for l, h in zip(lo, hi)]
    if n == 1:
        X = axes[0][0][:, None]
        WX = axes[0][1]
    else:
        A, B = np.meshgrid(axes[0][0], axes[1][0], indexing="ij")
        X = np.column_stack([A.ravel(), B.ravel()])
        WX = np.outer(axes[0][1], axes[1][1]).ravel()
    tg, tw = _panel_rule(0.0, 1.0, panels)
    total = 0j
    rows = max(1, CHUNK // len(tg))
    for s in range(0, len(X), rows):
        Xs = X[s : s + rows]
        tmax = 1.0 / np.sqrt(1.0 - np.sum(Xs * Xs, axis=1))
        T = tmax[:, None] * tg[None, :]
        W = (WX[s : s + rows] * tmax)[:, None] * tw[None, :] * T ** (n - 1)
        if f is None:
            vals = np.ones(T.size)
        else:
            XX = np.repeat(Xs, len(tg), axis=0)
            vals = f(XX, 1.0 / T.ravel())
        total += np.sum(W.ravel() * vals)
    return total


def domain_volume(G: GroupSpec, quad_res: int = 256) -> float:
    return float(_domain_integral(G, None, quad_res).real)


def volume_average(G: GroupSpec, f: TestFunction, quad_res: int = 256) -> complex:
    """(1 / vol) int_F f dnu, normalized by the same rule applied to f = 1."""
    return complex(_domain_integral(G, f, quad_res) / _domain_integral(G, None, quad_res))


# -- experiments ------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    group: str
    cutoff: dict
    alpha: float
    kappa: float
    y: list[float]
    delta_min: list[float]
    integrals: list[complex]
    volume_average: complex
    errors: list[float]
    rho: float
    constant: float
    residual: float
    predicted: float
    inconclusive: bool
    runtime: float
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(e < 0 for e in self.errors):
            raise ValueError("errors must be nonnegative")
        if any(a <= b for a, b in zip(self.y, self.y[1:])):
            raise ValueError("y grid must be strictly decreasing")

    def csv_rows(self) -> list[str]:
        rows = ["y,delta_min,integral_re,integral_im,vol_avg_re,vol_avg_im,abs_err"]
        va = self.volume_average
        for y, dm, I, e in zip(self.y, self.delta_min, self.integrals, self.errors):
            rows.append(f"{y:.12e},{dm:.12e},{I.real:.12e},{I.imag:.12e},{va.real:.12e},{va.imag:.12e},{e:.12e}")
        return rows

    def report(self) -> dict:
        return {
            "group": self.group,
            "cutoff": self.cutoff,
            "alpha": self.alpha,
            "kappa": self.kappa,
            "fitted_exponent": self.rho,
            "fitted_constant": self.constant,
            "residual_log10": self.residual,
            "predicted_exponent": self.predicted,
            "inconclusive": self.inconclusive,
            "runtime_s": self.runtime,
            "config": self.config,
        }


def fit_power_law(y: Sequence[float], err: Sequence[float], drop: int = 2) -> tuple[float, float, float]:
    """Least squares log10 err = log10 C + rho log10 y after dropping the `drop` largest y.

    Returns (rho, C, residual) where residual is the RMS deviation in log10.
    """
    y = np.asarray(y, float)
    err = np.asarray(err, float)
    order = np.argsort(-y)
    y, err = y[order][drop:], err[order][drop:]
    ok = err > 0
    if ok.sum() < 3:
        raise FitError("fewer than 3 usable points")
    lx, ly = np.log10(y[ok]), np.log10(err[ok])
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    return float(coef[0]), float(10 ** coef[1]), float(np.sqrt(np.mean(res**2)))


def delta_law(y: float, alpha: float, kappa: float = 1.0) -> float:
    return min(1.0, kappa * y**alpha)


def run_equidistribution(G: GroupSpec, f: TestFunction, kind: str, y_grid: Sequence[float], alpha: float = 0.0,
                         kappa: float = 1.0, gamma: Sequence[float] | None = None, h: float | None = None,
                         q: float = DEFAULT_Q, quad_res: int = 256, drop: int = 2, residual_cap: float = 0.15) -> ExperimentResult:
    """Horosphere integral versus <chi> times the volume average across y_grid."""
    if not 0 <= alpha <= 0.5:
        raise ValueError("alpha must lie in [0, 1/2]")
    y_grid = [float(t) for t in y_grid]
    if any(a <= b for a, b in zip(y_grid, y_grid[1:])):
        raise ValueError("y grid must be strictly decreasing")
    gamma = tuple(gamma) if gamma is not None else (0.0,) * G.n
    t0 = time.time()
    avg = volume_average(G, f, quad_res)
    integrals, errors, dmins = [], [], []
    for y in y_grid:
        d = delta_law(y, alpha, kappa)
        cut = CutoffSpec(kind, (d,) * G.n, gamma, h)
        I = horosphere_integral(G, f, cut, y, q)
        integrals.append(I)
        errors.append(abs(I - cut.mass * avg))
        dmins.append(cut.delta_min)
    try:
        rho, C, res = fit_power_law(y_grid, errors, drop)
        inconclusive = res > residual_cap
    except FitError:
        rho, C, res, inconclusive = float("nan"), float("nan"), float("nan"), True
    predicted = (1 - 2 * alpha) * (G.n - G.sigma1)
    cut_desc = CutoffSpec(kind, (1.0,) * G.n, gamma, h).describe()
    return ExperimentResult(G.name, cut_desc, alpha, kappa, y_grid, dmins, integrals, avg, errors, rho, C, res,
                            predicted, inconclusive, time.time() - t0,
                            {"q": q, "quad_res": quad_res, "drop": drop, "gamma": list(gamma)})


def escape_demo(G: GroupSpec, c_box: float, y_grid: Sequence[float], eta: Sequence[float] | None = None,
                samples: int = 41) -> list[tuple[float, float]]:
    """Minimum invariant height over the box of side c_box sqrt(y) centred at eta, per y."""
    eta = np.zeros(G.n) if eta is None else np.asarray(eta, float)
    rows = []
    for y in y_grid:
        side = c_box * math.sqrt(y)
        ax = np.linspace(-side / 2, side / 2, samples)
        grids = np.meshgrid(*([ax] * G.n), indexing="ij")
        X = eta + np.column_stack([g.ravel() for g in grids])
        heights = invariant_height_arrays(G, X, np.full(len(X), float(y)))
        rows.append((float(y), float(heights.min())))
    return rows
