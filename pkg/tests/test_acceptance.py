"""Acceptance suite: one test per criterion, each timed and reported on one line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or as a script.
"""
import itertools
import math
import time

import mpmath
import numpy as np
import pytest

import counting_oracles as co
from horolab import clifford as C
from horolab import mobius as M
from horolab.automorphic import (
    eisenstein_coprime_bruteforce,
    eisenstein_direct,
    eisenstein_expansion_n1,
    fourier_extract,
    maass_selberg_check_n1,
    rankin_selberg_profile,
    scattering_phi_n1,
)
from horolab.groups import count_above, enumerate_cosets, get_group
from horolab.horosphere import (
    CutoffSpec,
    build_pointpair_test_function,
    eigen_test_function,
    escape_demo,
    horosphere_integral,
    horosphere_termwise,
    run_equidistribution,
    volume_average,
)
from horolab.specfun import (
    BesselOrder,
    bessel_k,
    bessel_ode_residual,
    fit_imaginary_order_constant,
    mellin_k_integral,
    mellin_k_quadrature,
    refine_grid,
)
from horolab.sums import CoefficientArray, Polynomial, SmoothFunction, direct_sum, sum_by_parts

PSL = get_group("psl2z")
PICARD = get_group("picard")


class Report:
    """Collects named checks for one criterion and prints a single verdict line."""

    def __init__(self, number, title, budget, capsys):
        self.number, self.title, self.budget = number, title, budget
        self.capsys = capsys
        self.checks = []
        self.t0 = time.perf_counter()

    def check(self, ok, label):
        self.checks.append((bool(ok), label))

    def finish(self):
        elapsed = time.perf_counter() - self.t0
        self.check(elapsed < self.budget, f"runtime {elapsed:.1f}s < {self.budget:.0f}s")
        failed = [label for ok, label in self.checks if not ok]
        verdict = "PASS" if not failed else "FAIL"
        shown = failed if failed else [label for _, label in self.checks]
        line = f"{verdict} criterion {self.number} ({self.title}): " + "; ".join(shown)
        with self.capsys.disabled():
            print("\n" + line, flush=True)
        assert not failed, line


@pytest.fixture
def report(request, capsys):
    def make(number, title, budget):
        return Report(number, title, budget, capsys)

    return make


# -- 1. Clifford algebra ----------------------------------------------------------


def _exact_slot_sign_laws(n):
    # (e_I e_J)* = e_J* e_I* and bar likewise, in the integer sign tables
    sign, target = C.product_tables(n)
    sg = C.involution_signs(n)
    size = C.n_slots(n)
    bad = 0
    for i, j in itertools.product(range(size), repeat=2):
        k = target[i, j]
        bad += sg["prime"][k] * sign[i, j] != sg["prime"][i] * sg["prime"][j] * sign[i, j]
        bad += sg["star"][k] * sign[i, j] != sg["star"][j] * sg["star"][i] * sign[j, i]
        bad += sg["bar"][k] * sign[i, j] != sg["bar"][j] * sg["bar"][i] * sign[j, i]
    return bad


def test_criterion_1_clifford(report):
    r = report(1, "Clifford algebra", 30)
    rng = np.random.default_rng(101)
    cases = 10_000
    for n in range(2, 6):
        size = C.n_slots(n)
        one = C.CliffordNumber.scalar(n, 1.0)
        assoc = rev = 0.0
        prime_bad = twice_bad = 0
        for _ in range(cases):
            a, b, c = (C.CliffordNumber(n, rng.uniform(-1, 1, size)) for _ in range(3))
            ab = C.multiply(a, b)
            lhs, rhs = C.multiply(ab, c), C.multiply(a, C.multiply(b, c))
            assoc = max(assoc, (lhs - rhs).norm() / (1 + a.norm() * b.norm() * c.norm()))
            prime_bad += ab.prime() != C.multiply(a.prime(), b.prime())
            # the reversal laws permute the summation order, so values agree to rounding
            scale = 1 + a.norm() * b.norm()
            rev = max(rev, (ab.star() - C.multiply(b.star(), a.star())).norm() / scale,
                      (ab.bar() - C.multiply(b.bar(), a.bar())).norm() / scale)
            twice_bad += not (a.prime().prime() == a and a.star().star() == a and a.bar().bar() == a)
        r.check(assoc <= 1e-12, f"n={n} associativity {assoc:.1e}")
        r.check(prime_bad == 0, f"n={n} prime automorphism exact ({prime_bad} misses)")
        r.check(_exact_slot_sign_laws(n) == 0, f"n={n} reversal laws exact in slot signs")
        r.check(rev <= 1e-14, f"n={n} reversal laws on values {rev:.1e}")
        r.check(twice_bad == 0, f"n={n} involutions square to identity")

        norm_err = conj_err = 0.0
        for _ in range(cases):
            a, b = C.random_group_element(n, rng), C.random_group_element(n, rng)
            ab = C.multiply(a, b)
            norm_err = max(norm_err, abs(ab.norm() - a.norm() * b.norm()) / (a.norm() * b.norm()))
            conj_err = max(conj_err, (C.multiply(a, a.bar()) - a.norm2() * one).norm() / a.norm2())
        r.check(norm_err <= 1e-10, f"n={n} |ab|=|a||b| {norm_err:.1e}")
        r.check(conj_err <= 1e-10, f"n={n} a abar=|a|^2 {conj_err:.1e}")

        inv_err = vec_err = 0.0
        for _ in range(cases):
            x = C.random_vector(n, rng)
            inv_err = max(inv_err, (C.multiply(x, C.vector_inverse(x)) - one).norm())
            vec_err = max(vec_err, (C.multiply(x, x.bar()) - x.norm2() * one).norm() / x.norm2())
        r.check(inv_err <= 1e-12, f"n={n} vector inverse {inv_err:.1e}")
        r.check(vec_err <= 1e-15, f"n={n} x xbar=|x|^2 {vec_err:.1e}")
    r.finish()


# -- 2. Moebius action -----------------------------------------------------------


def _separation(P, Q):
    # sqrt(2u) tracks the hyperbolic distance without the cancellation in arccosh
    return math.sqrt(2.0 * M.point_pair_u(P, Q))


def test_criterion_2_moebius(report):
    r = report(2, "Moebius action", 30)
    rng = np.random.default_rng(102)
    hom = inv = height = ident = 0.0
    nonpositive = 0
    for k in range(10_000):
        n = 1 + k % 3
        g, h = M.random_sl(n, rng), M.random_sl(n, rng)
        P = M.UpperHalfPoint(rng.uniform(-1, 1, n), rng.uniform(0.3, 2.0))
        gP = M.act_upper(g, P)
        hom = max(hom, _separation(M.act_upper(M.compose(g, h), P), M.act_upper(g, M.act_upper(h, P))))
        inv = max(inv, _separation(P, M.act_upper(M.inverse(g), gP)))
        e = M.compose(g, M.inverse(g))
        ident = max(ident, min(_identity_error(e, 1.0), _identity_error(e, -1.0)))
        y1 = M.height_after(g, P)
        nonpositive += not (y1 > 0 and gP.y > 0)
        height = max(height, abs(y1 - gP.y) / y1)
    r.check(hom <= 1e-9, f"homomorphism {hom:.1e}")
    r.check(inv <= 1e-9, f"inverse round trip {inv:.1e}")
    r.check(ident <= 1e-10, f"g g^-1 = +-1 {ident:.1e}")
    r.check(height <= 1e-9, f"height formula {height:.1e}")
    r.check(nonpositive == 0, f"{nonpositive} non-positive heights")
    r.finish()


def _identity_error(e, sign):
    n = e.n
    one = C.CliffordNumber.scalar(n, sign)
    zero = C.CliffordNumber.zero(n)
    return max((e.a - one).norm(), (e.b - zero).norm(), (e.c - zero).norm(), (e.d - one).norm())


# -- 3. counting -------------------------------------------------------------------


def test_criterion_3_counting(report):
    r = report(3, "counting bounds", 180)
    for G in (PSL, PICARD):
        n = G.n
        lo, hi = np.zeros(n), np.ones(n)
        oracle = co.oracle_points(G, 10, lo, hi)
        got = np.array([c.point for c in enumerate_cosets(G, 0, 10, (lo, hi))])
        got = np.unique(np.round(got, 9) + 0.0, axis=0)
        same = len(oracle) == len(got) and np.allclose(oracle, got)
        r.check(same, f"{G.name} enumeration = brute force ({len(got)} vs {len(oracle)})")

        rng = np.random.default_rng(5)
        mismatches = 0
        for P in co.random_points(n, rng, 30):
            for R in (0.1, 0.2, 0.5, 1.0):
                mismatches += count_above(G, P, R) != co.count_above_bruteforce(G, P, R)
        r.check(mismatches == 0, f"{G.name} count_above = brute force ({mismatches} misses)")

        rng = np.random.default_rng(3)
        boxes = [(np.zeros(n), np.full(n, 0.5)), (np.full(n, 0.1), np.full(n, 0.3)), (np.zeros(n), np.full(n, 0.05))]
        checks = [
            ("separation", lambda X: co.separation_constant(G, X, rng), [2.5, 5], [5, 10]),
            ("box count", lambda X: co.box_count_constant(G, X, boxes), [2.5, 5], [5, 10]),
        ]
        for label, fit, base, doubled in checks:
            a, b = fit(base), fit(doubled)
            r.check(co.drift(a, b) <= 2, f"{G.name} {label} k {a:.3g}/{b:.3g}")
        pts = co.random_points(n, rng, 100)
        a = co.height_count_constant(G, [0.2, 0.4, 1.0, 2.0], pts)
        b = co.height_count_constant(G, [0.1, 0.2, 0.5, 1.0], pts)
        r.check(co.drift(a, b) <= 2, f"{G.name} height count k {a:.3g}/{b:.3g}")
        a = co.denominator_count_constant(G, [1.25, 2.5, 5], boxes)
        b = co.denominator_count_constant(G, [2.5, 5, 10], boxes)
        r.check(co.drift(a, b) <= 2, f"{G.name} denominator count k {a:.3g}/{b:.3g}")
    r.finish()


# -- 4. summation by parts ---------------------------------------------------------------


def _exponential(rates):
    rates = np.asarray(rates, float)
    n = len(rates)

    def value(X):
        return np.exp(-X @ rates)

    partials = {}
    for k in range(1, n + 1):
        for A in itertools.combinations(range(n), k):
            factor = float(np.prod(-rates[list(A)]))
            partials[A] = lambda X, f=factor: f * value(X)
    return SmoothFunction(n, value, partials)


def _random_array(rng, bounds):
    shape = [m + 1 for m in bounds]
    return CoefficientArray(rng.normal(size=shape) + 1j * rng.normal(size=shape))


def test_criterion_4_summation_by_parts(report):
    r = report(4, "summation by parts", 120)
    rng = np.random.default_rng(104)
    worst = {"finite": 0.0, "infinite": 0.0, "corollary": 0.0}
    for k in range(200):
        n = int(rng.integers(1, 4))
        bounds = [int(rng.integers(1, 10 if n == 3 else 16)) for _ in range(n)]
        arr = _random_array(rng, bounds)
        kind = ("finite", "finite", "infinite", "corollary")[k % 4]
        if kind == "finite":
            alpha = [int(rng.integers(0, m + 1)) for m in bounds]
            beta = [int(rng.integers(a, m + 1)) for a, m in zip(alpha, bounds)]
            g = Polynomial.random(n, 3, 4, rng)
            got = sum_by_parts(arr, g, alpha, beta)
        elif kind == "infinite":
            alpha = [int(rng.integers(0, m + 1)) for m in bounds]
            beta = [math.inf if rng.random() < 0.6 else int(rng.integers(a, m + 1)) for a, m in zip(alpha, bounds)]
            beta[0] = math.inf
            g = _exponential(rng.uniform(0.2, 0.6, n))
            got = sum_by_parts(arr, g, alpha, beta)
        else:
            arr.values[(0,) * n] = 0
            alpha, beta = [0] * n, list(bounds)
            g = Polynomial.random(n, 3, 4, rng)
            got = sum_by_parts(arr, g, alpha, beta, corollary=True)
        want = direct_sum(arr, g, alpha, beta)
        worst[kind] = max(worst[kind], abs(got - want) / max(1.0, abs(want)))
    for kind, err in worst.items():
        r.check(err <= 1e-8, f"{kind} rel err {err:.1e}")

    drifted = 0
    for _ in range(10):
        vals = rng.normal(size=(6, 5)) + 0j
        vals[0, 0] = 0
        arr = CoefficientArray(vals)
        base = Polynomial.random(2, 3, 4, rng)
        outs = []
        for g0 in (0.0, 1e6):
            def redefined(X, g0=g0):
                return np.where(np.all(X == 0, axis=1), g0, base(X))

            g = SmoothFunction(2, redefined, {A: (lambda X, A=A: base.partial(A, X)) for A in ((0,), (1,), (0, 1))})
            outs.append(sum_by_parts(arr, g, [0, 0], [5, 4], corollary=True))
        drifted += outs[0] != outs[1]
    r.check(drifted == 0, f"g(0) independence ({drifted} differ)")
    r.finish()


# -- 5. Eisenstein series ------------------------------------------------------------------


def _xi(s):
    return mpmath.pi ** (-s / 2) * mpmath.gamma(s / 2) * mpmath.zeta(s)


def test_criterion_5_eisenstein(report):
    r = report(5, "Eisenstein consistency", 300)
    v = eisenstein_direct(PSL, 0, M.UpperHalfPoint([0.0], 1.0), 2.0, tail_tol=1e-8).value
    ref = eisenstein_coprime_bruteforce(1j, 2.0, N=200)
    r.check(abs(v - ref) < 1e-6, f"direct vs coprime oracle {abs(v - ref):.1e}")

    def ev(X, Y):
        return np.array([eisenstein_direct(PSL, 0, M.UpperHalfPoint(x, y), 2.0, 1e-6).value for x, y in zip(X, Y)])

    ex = fourier_extract(PSL, ev, 2.0, (0.8, 1.2), 2)
    oracle = complex(_xi(mpmath.mpf(3)) / _xi(mpmath.mpf(4)))
    r.check(abs(ex.phi - oracle) < 1e-5, f"phi(2) vs xi(3)/xi(4) {abs(ex.phi - oracle):.1e}")

    for T in (1.0, 5.0, 20.0):
        dev = abs(abs(scattering_phi_n1(0.5 + 1j * T)) - 1)
        r.check(dev < 1e-8, f"|phi(1/2+{T:g}i)|-1 {dev:.1e}")

    ms = maass_selberg_check_n1(0.75 + 2j, 2.0, resolution=400)
    r.check(ms.residual <= 1e-3, f"Maass-Selberg residual {ms.residual:.1e}")
    r.finish()


# -- 6. Rankin-Selberg ------------------------------------------------------------------


def _continuum_band(T):
    """max / min of S(X) / (X (1 + log X)) over real X in [1, 100].

    S is a step function, so the extremes sit at the integers (sup) and
    just below them (inf).
    """
    ex = eisenstein_expansion_n1(0.5 + 1j * T, 100)
    ms = np.arange(1, 101)
    S = rankin_selberg_profile(ex, ms)
    if not np.any(S):
        return None
    norm = lambda X: X * (1 + np.log(X))
    at = S / norm(ms)
    below = S[:-1] / norm(ms[1:].astype(float))
    vals = np.concatenate([at, below])
    return float(vals.max() / vals.min())


def test_criterion_6_rankin_selberg(report):
    r = report(6, "Rankin-Selberg growth", 120)
    for T in (0.0, 1.0, 5.0):
        band = _continuum_band(T)
        if band is None:
            # E(., 1/2) vanishes identically, so the normalized sum is 0 and no band exists
            r.check(False, f"T={T:g} sum identically zero, band undefined")
        else:
            r.check(band <= 4, f"T={T:g} max/min {band:.2f}")
    r.finish()


# -- 7. Bessel functions ----------------------------------------------------------------------


def test_criterion_7_bessel(report):
    r = report(7, "Bessel suite", 300)
    worst = 0.0
    for x in np.geomspace(1e-4, 50, 60):
        want = math.sqrt(math.pi / (2 * x)) * math.exp(-x)
        worst = max(worst, abs(bessel_k(BesselOrder.real(0.5), x) - want) / want)
    r.check(worst <= 1e-10, f"K_1/2 closed form {worst:.1e}")

    ode = 0.0
    for order in [BesselOrder.real(0.0), BesselOrder.real(1.5), BesselOrder.real(3.0), BesselOrder.imaginary(1.0),
                  BesselOrder.imaginary(5.0), BesselOrder.imaginary(12.0)]:
        for x in [0.1, 0.5, 2.0, 8.0, 20.0]:
            res, scale = bessel_ode_residual(order, x)
            ode = max(ode, res / scale)
    r.check(ode <= 1e-6, f"ODE residual / scale {ode:.1e}")

    T_grid = np.array([0.0, 1.0, 4.0, 10.0, 20.0])
    x_grid = np.geomspace(0.01, 40.0, 10)
    c1 = fit_imaginary_order_constant(T_grid, x_grid)
    c2 = fit_imaginary_order_constant(refine_grid(T_grid), refine_grid(x_grid))
    r.check(co.drift(c1, c2) <= 2, f"imaginary-order bound constant {c1:.3g}/{c2:.3g}")

    worst = 0.0
    for n, s, delta in [(1, 0.5, 0.0), (2, 1.5, 0.0), (1, 0.8, 0.2), (2, 1 + 3j, 0.3), (3, 2.5, 1.0)]:
        a, b = mellin_k_integral(n, s, delta), mellin_k_quadrature(n, s, delta)
        worst = max(worst, abs(a - b) / abs(a))
    r.check(worst <= 1e-8, f"Mellin integral vs quadrature {worst:.1e}")
    r.finish()


# -- 8. equidistribution rates ------------------------------------------------------------------


def _psl_bump():
    return build_pointpair_test_function(PSL, M.UpperHalfPoint([0.1], 1.3), 0.8)


def test_criterion_8_equidistribution(report):
    r = report(8, "equidistribution rates", 1800)
    f = _psl_bump()
    t0 = time.perf_counter()
    res = run_equidistribution(PSL, f, "bump", [2.0**-j for j in range(4, 15)])
    dt = time.perf_counter() - t0
    r.check(0.4 <= res.rho <= 0.7, f"PSL rho {res.rho:.3f} in [0.4, 0.7]")
    r.check(res.residual <= 0.15, f"PSL residual {res.residual:.3f}")
    r.check(dt < 600, f"PSL run {dt:.0f}s")

    rng = np.random.default_rng(108)
    outside = []
    for _ in range(10):
        gamma = rng.uniform(-0.5, 0.5)
        kappa = rng.uniform(0.25, 1.0)
        d = run_equidistribution(PSL, f, "bump", [2.0**-j for j in range(4, 15)], kappa=kappa, gamma=(gamma,))
        if not (0.4 <= d.rho <= 0.7 and d.residual <= 0.15):
            outside.append(f"{d.rho:.2f}/{d.residual:.2f}")
    r.check(not outside, f"random (gamma, kappa) draws outside band: {len(outside)}/10 [{' '.join(outside)}]")

    fp = build_pointpair_test_function(PICARD, M.UpperHalfPoint([0.3, 0.1], 0.9), 0.8)
    t0 = time.perf_counter()
    res = run_equidistribution(PICARD, fp, "bump", [2.0**-j for j in range(4, 11)], kappa=0.5,
                               gamma=(0.2, 0.1), q=16, quad_res=192)
    dt = time.perf_counter() - t0
    r.check(0.8 <= res.rho <= 1.3, f"Picard rho {res.rho:.3f} in [0.8, 1.3]")
    r.check(res.residual <= 0.15, f"Picard residual {res.residual:.3f}")
    r.check(dt < 600, f"Picard run {dt:.0f}s")
    r.finish()


# -- 9. escape of mass ----------------------------------------------------------------------------


def test_criterion_9_escape(report):
    r = report(9, "escape demo", 60)
    ys = [10.0**-k for k in range(2, 7)]
    rows = escape_demo(PSL, 0.1, ys)
    hs = [h for _, h in rows]
    r.check(min(hs) > PSL.B0, f"min height {min(hs):.3g} > B0")
    growth = [b / a for a, b in zip(hs, hs[1:])]
    r.check(min(growth) >= 5, "heights " + " ".join(f"{h:.0f}" for h in hs)
            + ", growth per decade " + " ".join(f"{g:.2f}" for g in growth))

    f = _psl_bump()
    y = 1e-4
    cut = CutoffSpec("box", (0.1 * math.sqrt(y),), (0.0,))
    I = abs(horosphere_integral(PSL, f, cut, y))
    avg = abs(volume_average(PSL, f))
    r.check(I < 1e-6, f"horosphere integral {I:.1e}")
    r.check(avg > 1e-3, f"volume average {avg:.2e}")
    r.finish()


# -- 10. Fourier route ---------------------------------------------------------------------------


def test_criterion_10_fourier_route(report):
    r = report(10, "termwise vs quadrature", 180)
    rng = np.random.default_rng(110)
    worst = 0.0
    cache = {}
    for _ in range(20):
        T = float(rng.choice([1.0, 3.0, 6.0]))
        if T not in cache:
            ex = eisenstein_expansion_n1(0.5 + 1j * T, 400)
            cache[T] = (ex, eigen_test_function(PSL, ex))
        ex, f = cache[T]
        kind = str(rng.choice(["bump", "mollified"]))
        cut = CutoffSpec(kind, (rng.uniform(0.2, 1.0),), (rng.uniform(-1, 1),), 0.1 if kind == "mollified" else None)
        y = rng.uniform(0.02, 0.2)
        a = horosphere_integral(PSL, f, cut, y)
        b = horosphere_termwise(ex, cut, y)
        worst = max(worst, abs(a - b) / abs(b))
    r.check(worst <= 1e-6, f"max rel diff {worst:.1e}")
    r.finish()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
