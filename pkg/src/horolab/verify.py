"""Named invariant checks, grouped by module, for `horolab verify`.

Each property takes a numpy Generator and returns (ok, detail).  The suites are
small randomized samples of the invariants exercised in full by the test suite.
"""
from __future__ import annotations

import math
import time
import traceback
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import automorphic, clifford, groups, horosphere, mobius, specfun, sums

Check = Callable[[np.random.Generator], tuple[bool, str]]
REGISTRY: dict[str, list[tuple[str, Check]]] = {}


def prop(module: str, name: str):
    def wrap(fn: Check) -> Check:
        REGISTRY.setdefault(module, []).append((name, fn))
        return fn

    return wrap


def _worst(vals) -> float:
    return float(max(vals, default=0.0))


# -- clifford ------------------------------------------------------------------


def _rand(n, rng):
    return clifford.CliffordNumber(n, rng.normal(size=clifford.n_slots(n)))


@prop("clifford", "associativity")
def _assoc(rng):
    errs = []
    for n in range(2, 6):
        for _ in range(50):
            a, b, c = (_rand(n, rng) for _ in range(3))
            lhs = clifford.multiply(clifford.multiply(a, b), c)
            rhs = clifford.multiply(a, clifford.multiply(b, c))
            errs.append((lhs - rhs).norm() / (1 + a.norm() * b.norm() * c.norm()))
    return _worst(errs) < 1e-12, f"max rel err {_worst(errs):.2e}"


@prop("clifford", "prime is an automorphism")
def _prime(rng):
    errs = []
    for n in range(2, 6):
        for _ in range(50):
            a, b = _rand(n, rng), _rand(n, rng)
            lhs = clifford.involution_prime(clifford.multiply(a, b))
            rhs = clifford.multiply(clifford.involution_prime(a), clifford.involution_prime(b))
            errs.append((lhs - rhs).norm())
    return _worst(errs) < 1e-10, f"max err {_worst(errs):.2e}"


@prop("clifford", "star reverses products")
def _star(rng):
    errs = []
    for n in range(2, 6):
        for _ in range(50):
            a, b = _rand(n, rng), _rand(n, rng)
            lhs = clifford.involution_star(clifford.multiply(a, b))
            rhs = clifford.multiply(clifford.involution_star(b), clifford.involution_star(a))
            errs.append((lhs - rhs).norm())
    return _worst(errs) < 1e-10, f"max err {_worst(errs):.2e}"


@prop("clifford", "bar is prime composed with star")
def _bar(rng):
    errs = []
    for n in range(2, 6):
        for _ in range(50):
            a = _rand(n, rng)
            lhs = clifford.involution_bar(a)
            rhs = clifford.involution_star(clifford.involution_prime(a))
            errs.append((lhs - rhs).norm())
    return _worst(errs) < 1e-12, f"max err {_worst(errs):.2e}"


@prop("clifford", "involutions square to the identity")
def _invol(rng):
    errs = []
    for n in range(2, 6):
        a = _rand(n, rng)
        for f in (clifford.involution_prime, clifford.involution_star, clifford.involution_bar):
            errs.append((f(f(a)) - a).norm())
    return _worst(errs) == 0.0, f"max err {_worst(errs):.2e}"


@prop("clifford", "norm is multiplicative on the Clifford group")
def _normmul(rng):
    errs = []
    for n in range(2, 6):
        for _ in range(50):
            a = clifford.random_group_element(n, rng)
            b = clifford.random_group_element(n, rng)
            ab = clifford.multiply(a, b)
            errs.append(abs(ab.norm() - a.norm() * b.norm()) / (a.norm() * b.norm()))
    return _worst(errs) < 1e-12, f"max rel err {_worst(errs):.2e}"


@prop("clifford", "vector inverse")
def _vinv(rng):
    errs = []
    for n in range(2, 6):
        for _ in range(50):
            x = clifford.random_vector(n, rng)
            one = clifford.multiply(x, clifford.vector_inverse(x))
            errs.append((one - clifford.CliffordNumber.scalar(n, 1.0)).norm())
    return _worst(errs) < 1e-10, f"max err {_worst(errs):.2e}"


# -- mobius --------------------------------------------------------------------


def _rand_point(n, rng):
    return mobius.UpperHalfPoint(rng.uniform(-1, 1, n), rng.uniform(0.3, 2.0))


@prop("mobius", "random products validate")
def _valid(rng):
    bad = 0
    for n in (1, 2, 3):
        for _ in range(20):
            if not mobius.validate(mobius.random_sl(n, rng)):
                bad += 1
    return bad == 0, f"{bad} invalid"


@prop("mobius", "action is a homomorphism")
def _hom(rng):
    errs = []
    for n in (1, 2, 3):
        for _ in range(20):
            g, h = mobius.random_sl(n, rng), mobius.random_sl(n, rng)
            P = _rand_point(n, rng)
            A = mobius.act_upper(mobius.compose(g, h), P)
            B = mobius.act_upper(g, mobius.act_upper(h, P))
            errs.append(mobius.hyperbolic_distance(A, B))
    return _worst(errs) < 1e-7, f"max distance {_worst(errs):.2e}"


@prop("mobius", "inverse round trip")
def _inv(rng):
    errs = []
    for n in (1, 2, 3):
        for _ in range(20):
            g = mobius.random_sl(n, rng)
            P = _rand_point(n, rng)
            Q = mobius.act_upper(mobius.inverse(g), mobius.act_upper(g, P))
            errs.append(mobius.hyperbolic_distance(P, Q))
    return _worst(errs) < 1e-7, f"max distance {_worst(errs):.2e}"


@prop("mobius", "height formula and positivity")
def _height(rng):
    errs, neg = [], 0
    for n in (1, 2, 3):
        for _ in range(20):
            g = mobius.random_sl(n, rng)
            P = _rand_point(n, rng)
            y1 = mobius.height_after(g, P)
            neg += y1 <= 0
            errs.append(abs(y1 - mobius.act_upper(g, P).y) / y1)
    return neg == 0 and _worst(errs) < 1e-9, f"max rel err {_worst(errs):.2e}, {neg} nonpositive"


@prop("mobius", "point-pair invariant is preserved")
def _ppu(rng):
    errs = []
    for n in (1, 2, 3):
        for _ in range(20):
            g = mobius.random_sl(n, rng)
            P, Q = _rand_point(n, rng), _rand_point(n, rng)
            u0 = mobius.point_pair_u(P, Q)
            u1 = mobius.point_pair_u(mobius.act_upper(g, P), mobius.act_upper(g, Q))
            errs.append(abs(u1 - u0) / (1 + u0))
    return _worst(errs) < 1e-8, f"max rel err {_worst(errs):.2e}"


# -- groups --------------------------------------------------------------------


def _reduces_into_domain(name, rng):
    G = groups.get_group(name)
    bad = 0
    for _ in range(40):
        P = mobius.UpperHalfPoint(rng.uniform(-3, 3, G.n), 10 ** rng.uniform(-3, 0.5))
        Pr, W = groups.reduce(G, P)
        if not G.in_domain(Pr) or mobius.hyperbolic_distance(mobius.act_upper(W, P), Pr) > 1e-7:
            bad += 1
    return bad == 0, f"{bad} failures"


@prop("groups", "psl2z reduction lands in the domain")
def _red1(rng):
    return _reduces_into_domain("psl2z", rng)


@prop("groups", "picard reduction lands in the domain")
def _red2(rng):
    return _reduces_into_domain("picard", rng)


@prop("groups", "invariant height is Gamma-invariant")
def _ih(rng):
    errs = []
    for name in ("psl2z", "picard"):
        G = groups.get_group(name)
        for _ in range(10):
            P = mobius.UpperHalfPoint(rng.uniform(-1, 1, G.n), 10 ** rng.uniform(-2, 0.3))
            h0 = groups.invariant_height(G, P)
            for g in G.generators:
                errs.append(abs(groups.invariant_height(G, mobius.act_upper(g, P)) - h0) / h0)
    return _worst(errs) < 1e-9, f"max rel err {_worst(errs):.2e}"


@prop("groups", "compiled reduction matches the reference")
def _redarr(rng):
    errs = []
    for name in ("psl2z", "picard"):
        G = groups.get_group(name)
        X = rng.uniform(-2, 2, (30, G.n))
        Y = 10 ** rng.uniform(-2, 0.3, 30)
        _, Yr = groups.reduce_arrays(G, X, Y)
        for x, y, yr in zip(X, Y, Yr):
            errs.append(abs(groups.reduce(G, mobius.UpperHalfPoint(x, y))[0].y - yr) / yr)
    return _worst(errs) < 1e-9, f"max rel err {_worst(errs):.2e}"


@prop("groups", "psl2z coset count matches coprime pairs")
def _cosets(rng):
    G = groups.get_group("psl2z")
    X = 12
    got = len(groups.enumerate_cosets(G, 0, X, box=([0.0], [1.0])))
    # cosets Gamma_inf \ Gamma with c <= X and -d/c in [0, 1): 1 (c = 0) + sum phi(c)
    want = 1 + sum(sum(1 for d in range(c) if math.gcd(c, d) == 1) for c in range(1, X + 1))
    return got == want, f"{got} vs {want}"


# -- specfun -------------------------------------------------------------------


@prop("specfun", "K_1/2 closed form")
def _khalf(rng):
    xs = rng.uniform(0.05, 20, 20)
    errs = [abs(specfun.bessel_k(specfun.BesselOrder.real(0.5), x) - math.sqrt(math.pi / (2 * x)) * math.exp(-x))
            / (math.sqrt(math.pi / (2 * x)) * math.exp(-x)) for x in xs]
    return _worst(errs) < 1e-10, f"max rel err {_worst(errs):.2e}"


@prop("specfun", "Bessel ODE residual")
def _ode(rng):
    worst = 0.0
    for T in (0.0, 1.0, 5.0):
        for x in (0.5, 2.0, 8.0):
            res, scale = specfun.bessel_ode_residual(specfun.BesselOrder.imaginary(T), x)
            worst = max(worst, res / scale)
    return worst < 1e-6, f"max rel residual {worst:.2e}"


@prop("specfun", "imaginary order against mpmath")
def _kimag(rng):
    import mpmath

    errs = []
    for _ in range(8):
        T, x = rng.uniform(0, 15), rng.uniform(0.2, 10)
        ref = float(mpmath.besselk(1j * T, x).real)
        got = specfun.k_imag(T, x)
        errs.append(abs(got - ref) / max(abs(ref), 1e-300) if abs(ref) > 1e-12 else abs(got - ref))
    return _worst(errs) < 1e-8, f"max err {_worst(errs):.2e}"


@prop("specfun", "Mellin integral closed form against quadrature")
def _mellin(rng):
    errs = []
    for n, s, d in ((1, 0.5, 0.0), (1, 0.8, 0.2), (2, 1.5, 0.5), (2, 1 + 3j, 0.0), (3, 2.5, 1.0)):
        a, b = specfun.mellin_k_integral(n, s, d), specfun.mellin_k_quadrature(n, s, d)
        errs.append(abs(a - b) / abs(a))
    return _worst(errs) < 1e-8, f"max rel err {_worst(errs):.2e}"


# -- automorphic ---------------------------------------------------------------


@prop("automorphic", "scattering unitarity on the critical line")
def _unit(rng):
    errs = [abs(abs(automorphic.scattering_phi_n1(0.5 + 1j * T)) - 1) for T in (1.0, 5.0, 20.0)]
    return _worst(errs) < 1e-8, f"max err {_worst(errs):.2e}"


@prop("automorphic", "functional equation phi(s) phi(1 - s) = 1")
def _fe(rng):
    errs = []
    for _ in range(5):
        s = complex(rng.uniform(-1, 2), rng.uniform(-10, 10))
        errs.append(abs(automorphic.scattering_phi_n1(s) * automorphic.scattering_phi_n1(1 - s) - 1))
    return _worst(errs) < 1e-9, f"max err {_worst(errs):.2e}"


@prop("automorphic", "direct sum matches coprime brute force at s = 2")
def _direct(rng):
    G = groups.get_group("psl2z")
    v = automorphic.eisenstein_direct(G, 0, mobius.UpperHalfPoint(np.array([0.0]), 1.0), 2.0, tail_tol=1e-6)
    ref = automorphic.eisenstein_coprime_bruteforce(1j, 2.0, N=2000)
    return abs(v.value - ref) < 1e-6, f"diff {abs(v.value - ref):.2e}"


@prop("automorphic", "expansion is invariant under inversion")
def _inversion(rng):
    ex = automorphic.eisenstein_expansion_n1(0.5 + 3j, 40)
    errs = []
    for _ in range(5):
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(1.0, 1.5))
        w = -1 / z
        a = automorphic.synthesize(ex, [[z.real]], [z.imag])[0]
        b = automorphic.synthesize(ex, [[w.real]], [w.imag])[0]
        errs.append(abs(a - b))
    return _worst(errs) < 1e-8, f"max err {_worst(errs):.2e}"


@prop("automorphic", "Maass-Selberg identity")
def _ms(rng):
    r = automorphic.maass_selberg_check_n1(0.75 + 2j, 2.0, resolution=80)
    return r.residual <= 1e-3, f"residual {r.residual:.2e}"


@prop("automorphic", "coefficient file round trip")
def _files(rng):
    import os
    import tempfile

    ex = automorphic.eisenstein_expansion_n1(2.0 + 1j, 8)
    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "c.txt")
        automorphic.write_coefficients(p, ex)
        back = automorphic.ingest_coefficients(p)
    same = back.coeffs == ex.coeffs and back.phi == ex.phi and back.s == ex.s
    return same, "identical" if same else "mismatch"


# -- sums ----------------------------------------------------------------------


@prop("sums", "summation by parts equals the direct sum")
def _sbp(rng):
    errs = []
    for _ in range(20):
        n = int(rng.integers(1, 4))
        M = [int(rng.integers(2, 6)) for _ in range(n)]
        arr = sums.CoefficientArray(rng.normal(size=[m + 1 for m in M]) + 0j)
        g = sums.Polynomial.random(n, 3, 3, rng)
        alpha = [int(rng.integers(0, 2)) for _ in range(n)]
        beta = [float(m) for m in M]
        d = sums.direct_sum(arr, g, alpha, beta)
        p = sums.sum_by_parts(arr, g, alpha, beta)
        errs.append(abs(d - p) / max(1.0, abs(d)))
    return _worst(errs) < 1e-8, f"max rel err {_worst(errs):.2e}"


@prop("sums", "corollary form ignores g(0)")
def _cor(rng):
    vals = rng.normal(size=(4, 5)) + 0j
    vals[0, 0] = 0.0
    arr = sums.CoefficientArray(vals)
    base = sums.Polynomial(np.array([[1, 2], [0, 1]]), np.array([1.0, 0.5]))

    def redefined(X):
        out = base(X)
        return np.where(np.all(X == 0, axis=1), 7.0, out)

    other = sums.SmoothFunction(2, redefined, {A: (lambda X, A=A: base.partial(A, X)) for A in ((0,), (1,), (0, 1))})
    a = sums.sum_by_parts(arr, base, [0, 0], [3.0, 4.0], corollary=True)
    b = sums.sum_by_parts(arr, other, [0, 0], [3.0, 4.0], corollary=True)
    d = sums.direct_sum(arr, base, [0, 0], [3.0, 4.0])
    ok = abs(a - b) < 1e-12 and abs(a - d) < 1e-8 * max(1, abs(d))
    return ok, f"|a-b| {abs(a - b):.2e}, |a-direct| {abs(a - d):.2e}"


@prop("sums", "flipping all signs conjugates twisted sums")
def _twist(rng):
    ex = automorphic.eisenstein_expansion_n1(2.0 + 1.5j, 30)
    # coefficients of a real-valued function: c_{-m} = conj(c_m)
    real = automorphic.FourierExpansion(ex.s, 1, ex.delta, ex.phi,
                                        {m: (c if m[0] > 0 else np.conj(ex.coeffs[(-m[0],)])) for m, c in ex.coeffs.items()},
                                        kind="noncuspidal")
    errs = []
    for _ in range(5):
        al = [rng.uniform(0, 1)]
        a = sums.twisted_sum(real, [25], al, [1])
        b = sums.twisted_sum(real, [25], al, [-1])
        errs.append(abs(a - np.conj(b)) / max(1.0, abs(a)))
    return _worst(errs) < 1e-12, f"max rel err {_worst(errs):.2e}"


# -- horosphere ----------------------------------------------------------------


@prop("horosphere", "constant function integrates to the cutoff mass")
def _norm(rng):
    G = groups.get_group("psl2z")
    one = horosphere.constant_function(G)
    errs = []
    for kind in horosphere.CUTOFF_KINDS:
        d = rng.uniform(0.2, 1.0)
        cut = horosphere.CutoffSpec(kind, (d,), (rng.uniform(-1, 1),), 0.1 if kind == "mollified" else None)
        v = horosphere.horosphere_integral(G, one, cut, 0.05)
        errs.append(abs(v - cut.mass) / cut.mass)
    return _worst(errs) < 1e-6, f"max rel err {_worst(errs):.2e}"


@prop("horosphere", "mollified cutoff has unit mass")
def _moll(rng):
    errs = []
    for h in (0.2, 0.1, 0.05):
        x = np.linspace(-1, 1, 400001)
        v = np.trapezoid(horosphere.mollified_box(x, h), x)
        errs.append(abs(v - 1))
    return _worst(errs) < 1e-8, f"max err {_worst(errs):.2e}"


@prop("horosphere", "cutoff transform matches quadrature")
def _ft(rng):
    errs = []
    for kind in horosphere.CUTOFF_KINDS:
        cut = horosphere.CutoffSpec(kind, (0.6,), (0.2,), 0.1 if kind == "mollified" else None)
        x = np.linspace(-1.5, 1.5, 300001)
        vals = cut.chi(x[:, None])
        for nu in (0.0, 1.0, 3.0):
            num = np.trapezoid(vals * np.exp(-2j * np.pi * nu * x), x)
            errs.append(abs(num - horosphere.cutoff_fourier(cut, [nu])))
    return _worst(errs) < 1e-5, f"max err {_worst(errs):.2e}"


@prop("horosphere", "termwise route matches quadrature")
def _termwise(rng):
    G = groups.get_group("psl2z")
    ex = automorphic.eisenstein_expansion_n1(0.5 + 4j, 400)
    f = horosphere.eigen_test_function(G, ex)
    cut = horosphere.CutoffSpec("bump", (0.5,), (0.1,))
    a = horosphere.horosphere_integral(G, f, cut, 0.05)
    b = horosphere.horosphere_termwise(ex, cut, 0.05)
    return abs(a - b) <= 1e-6 * abs(b), f"rel diff {abs(a - b) / abs(b):.2e}"


@prop("horosphere", "escape box stays high at the cusp")
def _escape(rng):
    G = groups.get_group("psl2z")
    rows = horosphere.escape_demo(G, 0.1, [1e-2, 1e-3, 1e-4])
    hs = [h for _, h in rows]
    # the corner of the box has height y / (x^2 + y^2) after inversion
    want = [1 / (0.0025 + y) for y, _ in rows]
    ok = all(h > G.B0 for h in hs) and all(b >= a for a, b in zip(hs, hs[1:]))
    ok = ok and all(abs(h - w) < 1e-9 * w for h, w in zip(hs, want))
    return ok, " ".join(f"{h:.3g}" for h in hs)


# -- runner --------------------------------------------------------------------


@dataclass
class PropertyResult:
    module: str
    name: str
    ok: bool
    detail: str
    seconds: float


def run(scope: str = "all", seed: int = 0) -> list[PropertyResult]:
    if scope != "all" and scope not in REGISTRY:
        raise KeyError(f"unknown scope {scope!r}; choose from {sorted(REGISTRY)} or 'all'")
    modules = list(REGISTRY) if scope == "all" else [scope]
    out = []
    for m in modules:
        for name, fn in REGISTRY[m]:
            rng = np.random.default_rng([seed, len(out)])
            t0 = time.time()
            try:
                ok, detail = fn(rng)
            except Exception as exc:  # a crash is a failed property, reported by name
                ok, detail = False, f"{type(exc).__name__}: {exc}"
                detail += " | " + traceback.format_exc(limit=1).strip().splitlines()[-1]
            out.append(PropertyResult(m, name, bool(ok), detail, time.time() - t0))
    return out
