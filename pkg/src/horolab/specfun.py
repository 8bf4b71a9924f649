"""Special functions: K-Bessel of real, imaginary and complex order, completed zeta,
and the Mellin-type K-integral."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import special

OSCILLATION_GUARD = 1e4
DECAY_CUTOFF = 45.0  # integrand below exp(-45) relative to its peak is dropped


class BesselRangeError(ValueError):
    pass


@dataclass(frozen=True)
class BesselOrder:
    """Order of K: real nu, purely imaginary i*T, or a general complex value."""

    kind: str
    value: complex

    def __post_init__(self):
        if self.kind not in ("real", "imaginary", "complex"):
            raise ValueError(f"unknown order kind {self.kind!r}")
        if self.kind == "imaginary" and self.value.real < 0:
            raise ValueError("imaginary order needs T >= 0")

    @classmethod
    def real(cls, nu: float) -> "BesselOrder":
        return cls("real", complex(float(nu), 0.0))

    @classmethod
    def imaginary(cls, T: float) -> "BesselOrder":
        return cls("imaginary", complex(abs(float(T)), 0.0))

    @classmethod
    def from_spectral(cls, s: complex, n: int) -> "BesselOrder":
        """The order s - n/2 used in Fourier expansions on H^{n+1}."""
        nu = complex(s) - n / 2.0
        if abs(nu.imag) < 1e-15:
            return cls.real(abs(nu.real))
        if abs(nu.real) < 1e-15:
            return cls.imaginary(abs(nu.imag))
        return cls("complex", nu)

    @property
    def nu(self) -> complex:
        if self.kind == "imaginary":
            return complex(0.0, self.value.real)
        return self.value


def _contour_angle(nu: complex, x: float) -> float:
    # the peak of |integrand| on Im t = theta is exp(-x cos(theta) - T theta);
    # the best line passes through the saddle, sin(theta) = T / x
    T = abs(nu.imag)
    if T == 0.0:
        return 0.0
    cap = max(0.0, math.pi / 2.0 - 3.0 / T)
    return min(math.asin(min(1.0, T / x)), cap)


def k_contour(nu: complex, x: float) -> complex:
    """K_nu(x) = (1/2) int_R exp(-x cosh t + nu t) dt along Im t = theta.

    The shift theta -> pi/2 removes the cancellation that makes K_{iT}(x)
    exponentially small for x < T.  The rule is the trapezoid rule on the
    shifted line, which converges geometrically for this entire integrand.
    """
    if x <= 0:
        raise ValueError("x must be positive")
    nu = complex(nu)
    if nu.real < 0:
        nu = -nu  # K_{-nu} = K_nu
    theta = _contour_angle(nu, x)
    ct = math.cos(theta)
    # stretch where the decay x cosh(u) cos(theta) reaches DECAY_CUTOFF
    a = nu.real
    u_max = math.acosh(max(1.0, (DECAY_CUTOFF + a * 6.0) / (x * ct))) + 1.0
    T = abs(nu.imag)
    if T * u_max > OSCILLATION_GUARD:
        raise BesselRangeError(f"order {nu} at x={x}: oscillatory range too long")
    # step: resolve |phase'| ~ x cosh(u) + T at the far end, and the strip width
    strip = (math.pi / 2.0 - theta) if theta > 0 else 1.0
    freq = x * math.cosh(u_max) + T + a + 1.0
    h = min(0.1, 2.0 * math.pi / (4.0 * freq), 2.0 * math.pi * strip / 40.0)
    m = int(math.ceil(u_max / h))
    u = np.linspace(-m * h, m * h, 2 * m + 1)
    t = u + 1j * theta
    vals = np.exp(-x * np.cosh(t) + nu * t)
    return complex(0.5 * h * np.sum(vals))


def _contour_plan(nu: complex, x: float) -> tuple[float, float, float]:
    theta = _contour_angle(nu, x)
    ct = math.cos(theta)
    a = nu.real
    u_max = math.acosh(max(1.0, (DECAY_CUTOFF + a * 6.0) / (x * ct))) + 1.0
    T = abs(nu.imag)
    if T * u_max > OSCILLATION_GUARD:
        raise BesselRangeError(f"order {nu} at x={x}: oscillatory range too long")
    strip = (math.pi / 2.0 - theta) if theta > 0 else 1.0
    freq = x * math.cosh(u_max) + T + a + 1.0
    h = min(0.1, 2.0 * math.pi / (4.0 * freq), 2.0 * math.pi * strip / 40.0)
    return theta, u_max, h


def k_contour_many(nu: complex, xs: np.ndarray, budget: int = 4_000_000) -> np.ndarray:
    """k_contour for many arguments at one order, batched by node count."""
    nu = complex(nu)
    if nu.real < 0:
        nu = -nu
    xs = np.asarray(xs, float).ravel()
    if np.any(xs <= 0):
        raise ValueError("x must be positive")
    out = np.empty(len(xs), complex)
    plans = [_contour_plan(nu, float(x)) for x in xs]
    counts = np.array([int(math.ceil(p[1] / p[2])) for p in plans])
    order = np.argsort(counts)
    i = 0
    while i < len(order):
        m = counts[order[i]]
        j = i
        # group rows whose node counts are within 25% so padding stays cheap
        while j < len(order) and counts[order[j]] <= 1.25 * m + 4 and (j - i + 1) * (2 * counts[order[j]] + 1) <= budget:
            j += 1
        j = max(j, i + 1)
        idx = order[i:j]
        M = int(counts[idx].max())
        th = np.array([plans[k][0] for k in idx])
        hs = np.array([plans[k][2] for k in idx])
        # each row uses its own step and stops at its own u_max (extra nodes are negligible)
        jgrid = np.arange(-M, M + 1)
        u = hs[:, None] * jgrid[None, :]
        t = u + 1j * th[:, None]
        vals = np.exp(-xs[idx, None] * np.cosh(t) + nu * t)
        out[idx] = 0.5 * hs * np.sum(vals, axis=1)
        i = j
    return out


def bessel_k(order: BesselOrder, x: float) -> float | complex:
    if not x > 0:
        raise ValueError("x must be positive")
    if order.kind == "real":
        return float(special.kv(order.value.real, x))
    val = k_contour(order.nu, x)
    if order.kind == "imaginary":
        return val.real
    return val


def bessel_k_array(order: BesselOrder, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, float)
    if order.kind == "real":
        return special.kv(order.value.real, x)
    out = np.array([k_contour(order.nu, float(v)) for v in x.ravel()]).reshape(x.shape)
    return out.real if order.kind == "imaginary" else out


def k_imag(T: float, x: float) -> float:
    return bessel_k(BesselOrder.imaginary(T), x)


# -- bound harness -------------------------------------------------------------

BOUND_EPS = 0.1


def imaginary_order_envelope(T: float, x: float, eps: float = BOUND_EPS) -> float:
    return (
        math.exp(-math.pi * T / 2.0)
        * (T + 1.0) ** (-1.0 / 3.0 + eps)
        * x ** (-eps)
        * min(1.0, math.exp(math.pi * T / 2.0 - x))
    )


def imaginary_order_ratio(T: float, x: float, eps: float = BOUND_EPS) -> float:
    return abs(k_imag(T, x)) / imaginary_order_envelope(T, x, eps)


def fit_imaginary_order_constant(T_grid, x_grid, eps: float = BOUND_EPS) -> float:
    return max(imaginary_order_ratio(T, x, eps) for T in T_grid for x in x_grid)


def refine_grid(grid) -> np.ndarray:
    g = np.sort(np.asarray(grid, float))
    mids = np.sqrt(g[:-1] * g[1:]) if np.all(g > 0) else 0.5 * (g[:-1] + g[1:])
    return np.sort(np.concatenate([g, mids]))


def bessel_k_bound_check(T: float, x: float, T_grid=None, x_grid=None, eps: float = BOUND_EPS) -> bool:
    """Whether |K_{iT}(x)| sits under the fitted envelope constant and that constant is stable.

    The constant is fitted over (T_grid, x_grid) and again over the refined
    grids; stable means the two fits differ by at most a factor 2.
    """
    if T_grid is None:
        T_grid = np.array([0.0, 0.5, 1, 2, 4, 8, 12, 16, 20])
    if x_grid is None:
        x_grid = np.geomspace(0.01, 40.0, 12)
    T_grid = np.union1d(T_grid, [T])
    x_grid = np.union1d(x_grid, [x])
    c1 = fit_imaginary_order_constant(T_grid, x_grid, eps)
    c2 = fit_imaginary_order_constant(refine_grid(T_grid), refine_grid(x_grid), eps)
    stable = max(c1, c2) <= 2.0 * min(c1, c2)
    return bool(stable and imaginary_order_ratio(T, x, eps) <= max(c1, c2) * (1 + 1e-12))


def power_bound_constant(s: float, n: int, u_grid, eps: float = BOUND_EPS) -> float:
    """max over u of K_{s-n/2}(u) / u^{n/2 - s - eps} for real s in (n/2, n)."""
    nu = s - n / 2.0
    return max(float(special.kv(nu, u)) / u ** (n / 2.0 - s - eps) for u in u_grid)


def bessel_ode_residual(order: BesselOrder, x: float, h: float | None = None) -> tuple[float, float]:
    """(|x^2 K'' + x K' - (x^2 + nu^2) K|, scale) with central differences.

    scale is x^2 |K''| + x |K'| + (x^2 + |nu|^2) |K|, so residual / scale is a
    relative measure.  For imaginary order nu^2 = -T^2.
    """
    if h is None:
        h = 1e-3 * x
    f = lambda t: bessel_k(order, t)
    f0, fp, fm = f(x), f(x + h), f(x - h)
    fpp, fmm = f(x + 2 * h), f(x - 2 * h)
    d1 = (-fpp + 8 * fp - 8 * fm + fmm) / (12 * h)
    d2 = (-fpp + 16 * fp - 30 * f0 + 16 * fm - fmm) / (12 * h * h)
    nu2 = order.nu**2
    res = x * x * d2 + x * d1 - (x * x + nu2) * f0
    scale = abs(x * x * d2) + abs(x * d1) + (x * x + abs(nu2)) * abs(f0)
    return float(abs(res)), float(scale)


# -- Mellin-type integral ------------------------------------------------------


def mellin_k_integral(n: int, s: complex, delta: float) -> complex:
    """int_0^infty u^{n/2 - delta} K_{s - n/2}(u) du in closed form."""
    s = complex(s)
    a = (n + 1 - delta - s) / 2.0
    b = (1 + s - delta) / 2.0
    for z in (a, b):
        if abs(z.imag) < 1e-14 and z.real <= 0 and abs(z.real - round(z.real)) < 1e-14:
            raise ValueError(f"Gamma pole at {z}")
    if not (n / 2.0 - delta + 1.0 > abs((s - n / 2.0).real)):
        raise ValueError("integral diverges for these parameters")
    val = 2.0 ** (n / 2.0 - delta - 1.0) * special.gamma(a) * special.gamma(b)
    return complex(val)


def mellin_k_quadrature(n: int, s: complex, delta: float) -> complex:
    """The same integral by adaptive quadrature of the integrand (cross-check)."""
    from scipy.integrate import quad

    order = BesselOrder.from_spectral(s, n)
    p = n / 2.0 - delta

    def integrand(u, part):
        v = complex(bessel_k(order, u)) * u**p
        return v.real if part == 0 else v.imag

    pieces = [0.0, 1e-8, 1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 60.0]
    total = 0j
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        re = quad(integrand, lo, hi, args=(0,), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        im = 0.0
        if order.kind == "complex":
            im = quad(integrand, lo, hi, args=(1,), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        total += complex(re, im)
    return total


# -- zeta ----------------------------------------------------------------------


def riemann_zeta(s: complex) -> complex:
    return complex(mpmath.zeta(s))


def completed_zeta(s: complex) -> complex:
    """xi(s) = pi^{-s/2} Gamma(s/2) zeta(s)."""
    s = complex(s)
    if abs(s) < 1e-14 or abs(s - 1) < 1e-14:
        raise ValueError("completed zeta has poles at 0 and 1")
    with mpmath.workdps(30):
        sm = mpmath.mpc(s.real, s.imag)
        v = mpmath.power(mpmath.pi, -sm / 2) * mpmath.gamma(sm / 2) * mpmath.zeta(sm)
    return complex(v)


@lru_cache(maxsize=4096)
def completed_zeta_cached(s_re: float, s_im: float) -> complex:
    return completed_zeta(complex(s_re, s_im))


def zeta_euler_maclaurin(s: complex, N: int = 30, terms: int = 12) -> complex:
    """Riemann zeta by Euler-Maclaurin summation (independent of mpmath's zeta)."""
    s = complex(s)
    ks = np.arange(1, N)
    total = np.sum(ks ** (-s))
    total += N ** (1 - s) / (s - 1) + 0.5 * N ** (-s)
    # Bernoulli corrections B_{2j}/(2j)! * s(s+1)...(s+2j-2) N^{-s-2j+1}
    fact = 1.0 + 0j
    poch = s
    for j in range(1, terms + 1):
        b = float(special.bernoulli(2 * j)[-1])
        fact = math.factorial(2 * j)
        total += b / fact * poch * N ** (-s - 2 * j + 1)
        poch = poch * (s + 2 * j - 1) * (s + 2 * j)
    return complex(total)
