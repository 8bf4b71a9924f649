import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horolab.automorphic import FourierExpansion, eisenstein_expansion_n1
from horolab.sums import (
    CoefficientArray,
    DecayError,
    Polynomial,
    SmoothFunction,
    bound_profile,
    cuspidal_envelope,
    direct_sum,
    noncuspidal_envelope,
    partial_sum,
    ramanujan_tau,
    sum_by_parts,
    tau_expansion,
    twisted_sum,
    twisted_sum_fast,
)


def _random_array(rng, M):
    return CoefficientArray(rng.normal(size=[m + 1 for m in M]) + 1j * rng.normal(size=[m + 1 for m in M]))


def _loop_sum(arr, X):
    # plain nested loop, independent of the cumulative-sum table
    hi = [math.floor(t) for t in X]
    if min(hi) < 0:
        return 0j
    return sum(arr.values[m] for m in itertools.product(*(range(h + 1) for h in hi)))


def test_partial_sum_examples(rng):
    ones = CoefficientArray(np.ones((5, 6)))
    assert partial_sum(ones, (2, 3)) == 12
    assert partial_sum(ones, (2.7, 3.2)) == 12
    assert partial_sum(ones, (-0.5, 3)) == 0
    arr = _random_array(rng, (4, 3, 2))
    assert partial_sum(arr, arr.bounds) == pytest.approx(arr.values.sum(), rel=1e-13)
    with pytest.raises(ValueError):
        partial_sum(ones, (5, 1))
    assert partial_sum(ones, (9, 1), clamp=True) == 10
    with pytest.raises(ValueError):
        partial_sum(ones, (1,))


def test_partial_sum_matches_loops(rng):
    arr = _random_array(rng, (6, 4, 3))
    for _ in range(30):
        X = [rng.uniform(-0.5, M + 0.99) for M in arr.bounds]
        assert partial_sum(arr, X) == pytest.approx(_loop_sum(arr, X), rel=1e-12, abs=1e-12)


def test_from_function_records_origin():
    arr = CoefficientArray.from_function((2, 2), lambda m: m[0] - m[1])
    assert arr.origin == 0
    assert arr.values[2, 0] == 2


def test_one_dimensional_example():
    arr = CoefficientArray(np.ones(4))
    g = Polynomial(np.array([[1]]), np.array([1.0]))
    assert sum_by_parts(arr, g, [0], [3]) == pytest.approx(6.0, abs=1e-12)
    assert direct_sum(arr, g, [0], [3]) == 6


def test_two_dimensional_random_polynomial(rng):
    for _ in range(5):
        arr = _random_array(rng, (7, 5))
        g = Polynomial.random(2, 4, 5, rng)
        d = direct_sum(arr, g, [0, 0], [7, 5])
        p = sum_by_parts(arr, g, [0, 0], [7, 5])
        assert abs(p - d) <= 1e-9 * abs(d)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_sum_by_parts_equals_direct(data):
    n = data.draw(st.integers(1, 3))
    M = [data.draw(st.integers(0, 12 if n == 3 else 20)) for _ in range(n)]
    alpha = [data.draw(st.integers(0, m)) for m in M]
    beta = [data.draw(st.integers(a, m)) for a, m in zip(alpha, M)]
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    arr = _random_array(rng, M)
    g = Polynomial.random(n, 3, 4, rng)
    d = direct_sum(arr, g, alpha, beta)
    p = sum_by_parts(arr, g, alpha, beta)
    assert abs(p - d) <= 1e-8 * max(1.0, abs(d))


def test_finite_difference_partials(rng):
    # no analytic partials, so every mixed derivative comes from central differences
    def value(X):
        return np.exp(-0.15 * X.sum(axis=1)) * np.cos(0.3 * X[:, 0] - 0.2 * X[:, 1])

    g = SmoothFunction(2, value)
    for _ in range(3):
        arr = _random_array(rng, (9, 6))
        d = direct_sum(arr, g, [1, 0], [9, 6])
        p = sum_by_parts(arr, g, [1, 0], [9, 6])
        assert abs(p - d) <= 1e-8 * max(1.0, abs(d))


def test_infinite_upper_limit(rng):
    def value(X):
        return np.exp(-0.5 * X[:, 0]) * (1 + X[:, 0] ** 2)

    def d0(X):
        x = X[:, 0]
        return np.exp(-0.5 * x) * (2 * x - 0.5 * (1 + x * x))

    g = SmoothFunction(1, value, {(0,): d0})
    arr = _random_array(rng, (15,))
    d = direct_sum(arr, g, [2], [math.inf])
    p = sum_by_parts(arr, g, [2], [math.inf])
    assert abs(p - d) <= 1e-8 * max(1.0, abs(d))


def test_infinite_limit_two_variables(rng):
    def value(X):
        return np.exp(-0.3 * X[:, 0] - 0.4 * X[:, 1])

    g = SmoothFunction(2, value, {
        (0,): lambda X: -0.3 * value(X),
        (1,): lambda X: -0.4 * value(X),
        (0, 1): lambda X: 0.12 * value(X),
    })
    arr = _random_array(rng, (6, 5))
    for beta in ([math.inf, 4], [math.inf, math.inf]):
        d = direct_sum(arr, g, [0, 1], beta)
        p = sum_by_parts(arr, g, [0, 1], beta)
        assert abs(p - d) <= 1e-8 * max(1.0, abs(d))


def test_infinite_limit_without_decay_is_rejected(rng):
    g = Polynomial(np.array([[1]]), np.array([1.0]))
    with pytest.raises(DecayError):
        sum_by_parts(_random_array(rng, (5,)), g, [0], [math.inf])


def test_bad_limits(rng):
    arr = _random_array(rng, (3, 3))
    g = Polynomial.random(2, 2, 2, rng)
    with pytest.raises(ValueError):
        sum_by_parts(arr, g, [2, 0], [1, 3])
    with pytest.raises(ValueError):
        sum_by_parts(arr, g, [0], [1])


def test_corollary_ignores_g_at_origin(rng):
    vals = rng.normal(size=(6, 5)) + 0j
    vals[0, 0] = 0
    arr = CoefficientArray(vals)
    base = Polynomial.random(2, 3, 4, rng)
    results = []
    for g0 in (0.0, 1e6):
        def redefined(X, g0=g0):
            return np.where(np.all(X == 0, axis=1), g0, base(X))

        g = SmoothFunction(2, redefined, {A: (lambda X, A=A: base.partial(A, X)) for A in ((0,), (1,), (0, 1))})
        results.append(sum_by_parts(arr, g, [0, 0], [5, 4], corollary=True))
    assert results[0] == results[1]
    d = direct_sum(arr, base, [0, 0], [5, 4])
    assert abs(results[0] - d) <= 1e-9 * abs(d)


def test_corollary_preconditions(rng):
    arr = _random_array(rng, (3, 3))
    g = Polynomial.random(2, 2, 2, rng)
    with pytest.raises(ValueError):
        sum_by_parts(arr, g, [0, 0], [3, 3], corollary=True)  # a(0) != 0
    arr.values[0, 0] = 0
    with pytest.raises(ValueError):
        sum_by_parts(arr, g, [1, 0], [3, 3], corollary=True)


# -- twisted sums --------------------------------------------------------------


def _random_expansion(rng, n, R, real=False):
    coeffs = {}
    for m in itertools.product(range(-R, R + 1), repeat=n):
        if any(m):
            coeffs[m] = complex(rng.normal(), rng.normal())
    if real:
        for m in list(coeffs):
            neg = tuple(-t for t in m)
            if m > neg:
                coeffs[neg] = np.conj(coeffs[m])
    return FourierExpansion(1.2, n, 1.0, 0.0, coeffs, kind="noncuspidal")


def test_twisted_zero_box(rng):
    ex = _random_expansion(rng, 2, 3)
    assert twisted_sum(ex, [0, 0], [0.3, 0.1]) == 0


def test_twisted_untwisted_is_raw_sum(rng):
    ex = _random_expansion(rng, 2, 4)
    raw = sum(ex.coeffs[m] for m in itertools.product(range(4), range(3)) if any(m))
    assert twisted_sum(ex, [3, 2], [0.0, 0.0]) == pytest.approx(raw, rel=1e-13)


def test_twisted_sign_flip_is_reflected_box(rng):
    ex = _random_expansion(rng, 2, 5)
    M, al = [4, 3], [0.37, -0.21]
    for signs in ([1, -1], [-1, 1], [-1, -1]):
        want = 0j
        for m in itertools.product(*(range(-t, 1) if e < 0 else range(t + 1) for e, t in zip(signs, M))):
            if any(m):
                want += ex.coeffs[m] * np.exp(2j * math.pi * (m[0] * al[0] + m[1] * al[1]))
        assert twisted_sum(ex, M, al, signs) == pytest.approx(want, rel=1e-12)


def test_twisted_conjugate_symmetry(rng):
    # c_{-m} = conj(c_m) for a real-valued function
    ex = _random_expansion(rng, 2, 5, real=True)
    for _ in range(5):
        al = rng.uniform(-1, 1, 2)
        a = twisted_sum(ex, [5, 4], al, [1, 1])
        b = twisted_sum(ex, [5, 4], al, [-1, -1])
        assert a == pytest.approx(np.conj(b), rel=1e-12)


def test_twisted_conjugate_symmetry_on_eisenstein():
    ex = eisenstein_expansion_n1(2.0 + 1.5j, 30)
    real = FourierExpansion(ex.s, 1, ex.delta, ex.phi,
                            {m: (c if m[0] > 0 else np.conj(ex.coeffs[(-m[0],)])) for m, c in ex.coeffs.items()},
                            kind="noncuspidal")
    for al in (0.1, 0.45, 0.8):
        assert twisted_sum(real, [25], [al], [1]) == pytest.approx(np.conj(twisted_sum(real, [25], [al], [-1])), rel=1e-12)


def test_twisted_missing_coefficient(rng):
    ex = _random_expansion(rng, 1, 3)
    with pytest.raises(KeyError):
        twisted_sum(ex, [5], [0.1])
    with pytest.raises(KeyError):
        twisted_sum_fast(ex, [5], np.array([[0.1]]))
    with pytest.raises(ValueError):
        twisted_sum(ex, [2], [0.1], [2])


def test_fast_matches_slow(rng):
    ex = _random_expansion(rng, 2, 4)
    alphas = rng.uniform(0, 1, (6, 2))
    fast = twisted_sum_fast(ex, [3, 4], alphas, [1, -1])
    slow = [twisted_sum(ex, [3, 4], a, [1, -1]) for a in alphas]
    assert np.allclose(fast, slow, rtol=1e-12, atol=1e-12)


# -- envelopes -------------------------------------------------------------------


def test_cuspidal_envelope_n1():
    for M in (3, 10, 100):
        assert cuspidal_envelope([M]) == pytest.approx(M**0.5 * math.log(2 * M) ** 2)


def test_noncuspidal_envelope_n1():
    s = 0.8
    for M in (100, 10**4, 10**6):
        assert noncuspidal_envelope([M], s) / M ** (1.5 - s) == pytest.approx(1.0, rel=2.0 / M)


def test_noncuspidal_envelope_n2():
    s = 1.4
    for M1, M2 in [(10, 3), (4, 40), (50, 50)]:
        want = max(M1, M2) * (min(M1, M2) + 1) ** (2 - s)
        ratio = noncuspidal_envelope([M1, M2], s) / want
        # |M| against max(M1, M2)
        assert 1.0 <= ratio <= math.sqrt(2) + 1e-12
    with pytest.raises(ValueError):
        noncuspidal_envelope([3, 3], 2.5)


def test_ramanujan_tau_values():
    assert ramanujan_tau(10) == [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]


def test_tau_multiplicative():
    tau = ramanujan_tau(60)
    for m, k in [(2, 3), (4, 5), (3, 7), (5, 11)]:
        assert tau[m * k - 1] == tau[m - 1] * tau[k - 1]


def test_cuspidal_profile_bounded(rng):
    ex = tau_expansion(400)
    prof = bound_profile(ex, [[M] for M in (25, 50, 100, 200, 400)], rng.uniform(0, 1, (64, 1)))
    assert prof.bounded
    assert prof.max_ratio < 5


def _decaying_expansion(s, N):
    # c_m = |m|^{1/2 - s}: partial sums grow like M^{3/2 - s}, the shape the law allows
    coeffs = {}
    for m in range(1, N + 1):
        coeffs[(m,)] = coeffs[(-m,)] = m ** (0.5 - s)
    return FourierExpansion(s, 1, 0.0, 1.0, coeffs, kind="noncuspidal")


def test_noncuspidal_profile_bounded(rng):
    s = 0.75
    grid = [[M] for M in (25, 50, 100, 200, 400)]
    alphas = np.vstack([[0.0], rng.uniform(0, 1, (63, 1))])  # alpha = 0 is the worst case here
    prof = bound_profile(_decaying_expansion(s, 400), grid, alphas, law="noncuspidal", s=s)
    assert prof.bounded
    ratios = [r[3] for r in prof.rows]
    assert max(ratios) <= 1.5 * min(ratios)
    with pytest.raises(ValueError):
        bound_profile(_decaying_expansion(s, 10), [[10]], np.zeros((1, 1)), law="noncuspidal")
    with pytest.raises(ValueError):
        bound_profile(_decaying_expansion(s, 10), [[10]], np.zeros((1, 1)), law="other")


def test_eisenstein_series_is_outside_the_noncuspidal_law(rng):
    # E(., s) has a y^s term, so it is not square integrable and its sums grow like M^{s + 1/2}
    s = 0.75
    ex = eisenstein_expansion_n1(s, 800)
    grid = [[M] for M in (25, 50, 100, 200, 400, 800)]
    alphas = np.vstack([[0.0], rng.uniform(0, 1, (63, 1))])
    prof = bound_profile(ex, grid, alphas, law="noncuspidal", s=s)
    assert not prof.bounded
    assert prof.rows[-1][3] > 4 * prof.rows[0][3]
