"""Repeated summation by parts in n variables, and twisted coefficient sums."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .automorphic import FourierExpansion

EPS = np.finfo(float).eps


class QuadratureError(RuntimeError):
    pass


class DecayError(RuntimeError):
    pass


@dataclass
class CoefficientArray:
    """a(m) for m in the box prod [0, M_j]; zero outside the box."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, complex)
        if self.values.ndim < 1:
            raise ValueError("need at least one dimension")

    @classmethod
    def from_function(cls, bounds: Sequence[int], fn: Callable[[tuple[int, ...]], complex]) -> "CoefficientArray":
        shape = tuple(int(b) + 1 for b in bounds)
        vals = np.zeros(shape, complex)
        for m in itertools.product(*(range(k) for k in shape)):
            vals[m] = fn(m)
        return cls(vals)

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def bounds(self) -> tuple[int, ...]:
        return tuple(k - 1 for k in self.values.shape)

    @property
    def origin(self) -> complex:
        return complex(self.values[(0,) * self.n])

    def cumulative(self) -> np.ndarray:
        c = self.values
        for ax in range(self.n):
            c = np.cumsum(c, axis=ax)
        return c


def partial_sum(arr: CoefficientArray, X: Sequence[float], clamp: bool = False) -> complex:
    """S(X) = sum over 0 <= m_j <= X_j of a(m)."""
    X = [float(t) for t in X]
    if len(X) != arr.n:
        raise ValueError(f"expected {arr.n} coordinates")
    idx = []
    for t, M in zip(X, arr.bounds):
        k = math.floor(t)
        if k < 0:
            return 0j
        if k > M:
            if not clamp:
                raise ValueError(f"X={t} outside the coefficient box [0, {M}]")
            k = M
        idx.append(k)
    return complex(arr.cumulative()[tuple(idx)])


class SmoothFunction:
    """g on R^n with optional analytic mixed partials.

    value(X) maps an (N, n) array to N values.  partials maps a sorted tuple
    of variable indices A to a function for d^{|A|} g / dx_A.  Missing
    partials fall back to central differences with one Richardson step.
    """

    def __init__(self, n: int, value: Callable[[np.ndarray], np.ndarray],
                 partials: dict[tuple[int, ...], Callable[[np.ndarray], np.ndarray]] | None = None,
                 fd_step: float = 1e-4):
        self.n = n
        self.value = value
        self.partials = dict(partials or {})
        self.fd_step = fd_step

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.value(np.atleast_2d(np.asarray(X, float))), complex)

    def partial(self, A: tuple[int, ...], X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        if not A:
            return self(X)
        if A in self.partials:
            return np.asarray(self.partials[A](X), complex)
        return self._finite_difference(A, X)

    def step(self, k: int, X: np.ndarray) -> np.ndarray:
        # O(h^4) after Richardson against rounding eps / h^k
        base = max(self.fd_step, EPS ** (1.0 / (4 + k)))
        return base * (1.0 + np.max(np.abs(X), axis=1))

    def _finite_difference(self, A: tuple[int, ...], X: np.ndarray) -> np.ndarray:
        k = len(A)
        h = self.step(k, X)

        def central(hh):
            acc = np.zeros(len(X), complex)
            for signs in itertools.product((1.0, -1.0), repeat=k):
                Y = X.copy()
                for j, sg in zip(A, signs):
                    Y[:, j] += sg * hh
                acc += np.prod(signs) * self(Y)
            return acc / (2.0 * hh) ** k

        d1 = central(h)
        d2 = central(h / 2)
        return d2 + (d2 - d1) / 3.0


class Polynomial(SmoothFunction):
    """g(x) = sum_k coef_k prod_j x_j^{e_kj} with exact partials."""

    def __init__(self, exponents: np.ndarray, coefs: np.ndarray):
        self.exponents = np.asarray(exponents, int)
        self.coefs = np.asarray(coefs, complex)
        n = self.exponents.shape[1]
        super().__init__(n, self._eval)

    def _eval(self, X: np.ndarray, A: tuple[int, ...] = ()) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.zeros(len(X), complex)
        for e, c in zip(self.exponents, self.coefs):
            term = np.full(len(X), c, complex)
            for j in range(self.n):
                p = e[j]
                if j in A:
                    if p == 0:
                        term = 0.0 * term
                        break
                    term = term * p * X[:, j] ** (p - 1)
                else:
                    term = term * X[:, j] ** p
            out += term
        return out

    def partial(self, A, X):
        return self._eval(np.atleast_2d(np.asarray(X, float)), tuple(A))

    @classmethod
    def random(cls, n: int, degree: int, terms: int, rng: np.random.Generator) -> "Polynomial":
        ex = rng.integers(0, degree + 1, size=(terms, n))
        co = rng.normal(size=terms) + 1j * rng.normal(size=terms)
        return cls(ex, co)


def _subsets(items: Sequence[int]):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def _gauss_unit(q: int):
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def _cell_integral(g: SmoothFunction, A: tuple[int, ...], base: np.ndarray, pieces: list[list[tuple]], q: int,
                   S_of: Callable[[tuple[int, ...]], complex]) -> complex:
    """int over prod_{j in A} of the axis pieces of g_A(x) * S(x).

    pieces[l] lists (lo, hi, cellindex, kind) for axis A[l]; kind is "unit" for
    a finite interval or "tail" for [lo, infinity).  S is constant on a tail,
    and g vanishes at infinity, so int_lo^inf d_j h dx_j = -h(lo) removes that
    axis from the quadrature.
    """
    u, w = _gauss_unit(q)
    total = 0j
    for combo in itertools.product(*pieces):
        key = tuple(p[2] for p in combo)
        Sval = S_of(key)
        if Sval == 0:
            continue
        X0 = base.copy()
        axes, axes_x, axes_w = [], [], []
        sign = 1.0
        for j, (lo, hi, _, kind) in zip(A, combo):
            if kind == "tail":
                X0[j] = lo
                sign = -sign
            else:
                axes.append(j)
                axes_x.append(lo + (hi - lo) * u)
                axes_w.append((hi - lo) * w)
        if not axes:
            total += sign * Sval * complex(g(X0[None, :])[0])
            continue
        grids = np.meshgrid(*axes_x, indexing="ij")
        wgrid = np.ones_like(grids[0])
        for l, aw in enumerate(axes_w):
            shape = [1] * len(axes)
            shape[l] = len(aw)
            wgrid = wgrid * aw.reshape(shape)
        X = np.tile(X0, (grids[0].size, 1))
        for l, j in enumerate(axes):
            X[:, j] = grids[l].ravel()
        vals = g.partial(tuple(axes), X)
        total += sign * Sval * np.sum(wgrid.ravel() * vals)
    return total


def sum_by_parts(arr: CoefficientArray, g: SmoothFunction, alpha: Sequence[int], beta: Sequence[float],
                 q: int = 8, rtol: float = 1e-10, corollary: bool = False) -> complex:
    """sum over alpha_j <= m_j <= beta_j of g(m) a(m) via the repeated summation-by-parts identity.

    beta_j may be math.inf; the boundary term at infinity is then dropped
    and the tail integral is checked for convergence.  With corollary=True
    (alpha = 0 and a(0) = 0) only the terms with A u B = N are formed, so g is
    never evaluated at the origin.
    """
    n = arr.n
    alpha = [int(a) for a in alpha]
    beta = [b if math.isinf(b) else int(b) for b in beta]
    if len(alpha) != n or len(beta) != n:
        raise ValueError("alpha and beta need one entry per variable")
    for a, b in zip(alpha, beta):
        if a < 0 or b < a:
            raise ValueError("need 0 <= alpha_j <= beta_j")
    if corollary:
        if any(alpha):
            raise ValueError("the corollary form needs alpha = 0")
        if arr.origin != 0:
            raise ValueError("the corollary form needs a(0) = 0")
    C = [j for j in range(n) if math.isinf(beta[j])]
    cum = arr.cumulative()
    Mb = arr.bounds

    def S_at(idx: Sequence[int]) -> complex:
        clipped = []
        for t, M in zip(idx, Mb):
            if t < 0:
                return 0j
            clipped.append(min(t, M))
        return complex(cum[tuple(clipped)])

    if C:
        _check_decay(g, arr, alpha, beta, C)

    total = 0j
    N = list(range(n))
    for A in _subsets(N):
        rest = [j for j in N if j not in A]
        for B in _subsets([j for j in rest if j not in C]):
            if corollary and len(A) + len(B) != n:
                continue
            sign = (-1) ** (n + len(B))
            # fixed coordinates for g (I_{A,B}) and for S (tilde I_{A,B})
            gbase = np.zeros(n)
            sfix = {}
            for j in rest:
                if j in B:
                    gbase[j] = beta[j]
                    sfix[j] = beta[j]
                else:
                    gbase[j] = alpha[j]
                    sfix[j] = alpha[j] - 1
            if not A:
                idx = [sfix[j] for j in N]
                Sv = S_at(idx)
                if Sv != 0:
                    total += sign * complex(g(gbase[None, :])[0]) * Sv
                continue
            pieces = []
            for j in A:
                axis = []
                if not math.isinf(beta[j]):
                    for m in range(alpha[j], beta[j]):
                        axis.append((float(m), float(m + 1), m, "unit"))
                else:
                    # S is constant beyond the box, so one tail piece covers the rest
                    sat = max(alpha[j], Mb[j])
                    for m in range(alpha[j], sat):
                        axis.append((float(m), float(m + 1), m, "unit"))
                    axis.append((float(sat), math.inf, sat, "tail"))
                pieces.append(axis)

            def S_of(key, A=A, sfix=sfix):
                idx = [0] * n
                for j in N:
                    idx[j] = sfix[j] if j in sfix else None
                for l, j in enumerate(A):
                    idx[j] = key[l]
                return S_at(idx)

            v1 = _cell_integral(g, A, gbase, pieces, q, S_of)
            v2 = _cell_integral(g, A, gbase, pieces, q + 4, S_of)
            if abs(v1 - v2) > rtol * max(1.0, abs(v2)) * 1e3:
                raise QuadratureError(f"cell quadrature did not settle for A={A}: {v1} vs {v2}")
            total += sign * v2
    return complex(total)


def _check_decay(g: SmoothFunction, arr, alpha, beta, C) -> None:
    # g must vanish at infinity along each infinite axis, else boundary terms survive
    base = np.array([float(a if j in C else b) for j, (a, b) in enumerate(zip(alpha, beta))])
    scale = 1.0 + float(np.max(np.abs(g(base[None, :]))))
    for j in C:
        probes = []
        for far in (1e6, 1e7):
            X = base.copy()
            X[j] = far
            probes.append(abs(complex(g(X[None, :])[0])))
        if max(probes) > 1e-8 * scale:
            raise DecayError(f"g does not decay along axis {j}: |g| ~ {max(probes):.3g} at x_{j} = 1e7")


def direct_sum(arr: CoefficientArray, g: SmoothFunction, alpha: Sequence[int], beta: Sequence[float]) -> complex:
    hi = [min(int(b) if not math.isinf(b) else M, M) for b, M in zip(beta, arr.bounds)]
    ranges = [np.arange(a, h + 1) for a, h in zip(alpha, hi)]
    if any(len(r) == 0 for r in ranges):
        return 0j
    grids = np.meshgrid(*ranges, indexing="ij")
    X = np.stack([gr.ravel() for gr in grids], axis=1).astype(float)
    vals = arr.values[tuple(gr.ravel() for gr in grids)]
    return complex(np.sum(g(X) * vals))


# -- twisted coefficient sums -----------------------------------------------------


def twisted_sum(expansion: FourierExpansion, M: Sequence[int], alpha: Sequence[float],
                signs: Sequence[int] | None = None) -> complex:
    """sum_{0 <= m_j <= M_j} c_{eps m} e(sum_j eps_j m_j alpha_j), with c_0 := 0."""
    n = expansion.n
    M = [int(t) for t in M]
    signs = [1] * n if signs is None else [int(t) for t in signs]
    if any(t not in (1, -1) for t in signs):
        raise ValueError("signs must be +-1")
    alpha = np.asarray(alpha, float)
    total = 0j
    for m in itertools.product(*(range(t + 1) for t in M)):
        if not any(m):
            continue
        key = tuple(e * k for e, k in zip(signs, m))
        if key not in expansion.coeffs:
            raise KeyError(f"coefficient {key} missing")
        phase = sum(e * k * a for e, k, a in zip(signs, m, alpha))
        total += expansion.coeffs[key] * np.exp(2j * math.pi * phase)
    return complex(total)


def twisted_sum_fast(expansion: FourierExpansion, M: Sequence[int], alphas: np.ndarray,
                     signs: Sequence[int] | None = None) -> np.ndarray:
    """twisted_sum for many alpha at once (rows of alphas)."""
    n = expansion.n
    signs = np.array([1] * n if signs is None else signs)
    idx = [m for m in itertools.product(*(range(int(t) + 1) for t in M)) if any(m)]
    keys = [tuple(int(e * k) for e, k in zip(signs, m)) for m in idx]
    missing = [k for k in keys if k not in expansion.coeffs]
    if missing:
        raise KeyError(f"coefficient {missing[0]} missing")
    c = np.array([expansion.coeffs[k] for k in keys])
    E = np.array(keys, float)  # signed indices
    ph = np.exp(2j * math.pi * (np.atleast_2d(alphas) @ E.T))
    return ph @ c


def cuspidal_envelope(M: Sequence[int]) -> float:
    n = len(M)
    r = float(np.linalg.norm(M))
    return r ** (n / 2) * math.log(2 * r) ** (n + 1)


def noncuspidal_envelope(M: Sequence[int], s: float, eps: float = 0.0) -> float:
    n = len(M)
    if not (n / 2 < s < n):
        raise ValueError("noncuspidal law needs n/2 < s < n")
    i0 = math.floor(s) + 1
    Ms = sorted((float(t) for t in M), reverse=True)
    r = float(np.linalg.norm(M))
    val = r ** (n / 2 + eps) * (Ms[i0 - 1] + 1) ** (i0 - s)
    for k in range(i0, n):
        val *= Ms[k] + 1
    return val


@dataclass
class BoundProfile:
    law: str
    rows: list[tuple[tuple[int, ...], float, float, float]]  # (M, max |sum|, envelope, ratio)
    bounded: bool

    @property
    def max_ratio(self) -> float:
        return max(r[3] for r in self.rows)


def bound_profile(expansion: FourierExpansion, M_grid: Sequence[Sequence[int]], alpha_samples: np.ndarray,
                  law: str = "cuspidal", s: float | None = None, eps: float = 0.0) -> BoundProfile:
    """Worst twisted sum over alpha_samples at each M, relative to the law's envelope.

    bounded means the largest ratio over the second half of the grid is at
    most twice the largest ratio over the first half.
    """
    rows = []
    for M in M_grid:
        M = tuple(int(t) for t in M)
        worst = float(np.max(np.abs(twisted_sum_fast(expansion, M, alpha_samples))))
        if law == "cuspidal":
            env = cuspidal_envelope(M)
        elif law == "noncuspidal":
            if s is None:
                raise ValueError("noncuspidal law needs s")
            env = noncuspidal_envelope(M, s, eps)
        else:
            raise ValueError(f"unknown law {law!r}")
        rows.append((M, worst, env, worst / env))
    half = max(1, len(rows) // 2)
    first = max(r[3] for r in rows[:half])
    second = max(r[3] for r in rows[half:]) if rows[half:] else first
    return BoundProfile(law, rows, bool(second <= 2 * first))


def ramanujan_tau(N: int) -> list[int]:
    """tau(1..N) from q prod (1 - q^k)^24 in exact integer arithmetic."""
    poly = np.zeros(N, dtype=object)
    poly[0] = 1
    for k in range(1, N):
        for _ in range(24):
            poly[k:] = poly[k:] - poly[:-k]
    return [int(v) for v in poly]  # tau(m) is the coefficient of q^{m-1}


def tau_expansion(N: int) -> FourierExpansion:
    """Normalized tau(m) / m^{11/2} as a cusp-form-like coefficient sequence (n = 1)."""
    t = ramanujan_tau(N)
    coeffs = {}
    for m in range(1, N + 1):
        v = float(t[m - 1]) / m**5.5
        coeffs[(m,)] = v
        coeffs[(-m,)] = v
    return FourierExpansion(0.5, 1, 0.0, 0.0, coeffs, kind="cuspform")
