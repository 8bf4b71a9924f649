"""Compiled inner loops for the built-in groups (reduction, orbit sums)."""
from __future__ import annotations

import numpy as np
from numba import njit

EDGE = 1e-13
MAX_STEPS = 10_000


@njit(cache=True)
def reduce_psl2z(x, y):
    """Reduce points of H^2 into |x| <= 1/2, x^2 + y^2 >= 1 in place.

    Returns the largest number of steps used; -1 if the cap was hit.
    """
    worst = 0
    for i in range(x.shape[0]):
        xi = x[i]
        yi = y[i]
        steps = 0
        while True:
            xi -= np.floor(xi + 0.5)
            r = xi * xi + yi * yi
            if r >= 1.0 - EDGE:
                break
            xi = -xi / r
            yi = yi / r
            steps += 1
            if steps > MAX_STEPS:
                return -1
        x[i] = xi
        y[i] = yi
        if steps > worst:
            worst = steps
    return worst


@njit(cache=True)
def reduce_picard(x1, x2, y):
    """Reduce into |x1| <= 1/2, 0 <= x2 <= 1/2, |x|^2 + y^2 >= 1 in place."""
    worst = 0
    for i in range(x1.shape[0]):
        a = x1[i]
        b = x2[i]
        h = y[i]
        steps = 0
        while True:
            a -= np.floor(a + 0.5)
            b -= np.floor(b + 0.5)
            if b < 0.0:
                a = -a
                b = -b
            r = a * a + b * b + h * h
            if r >= 1.0 - EDGE:
                break
            # inversion: x -> -conj(x) / |P|^2
            a = -a / r
            b = b / r
            h = h / r
            steps += 1
            if steps > MAX_STEPS:
                return -1
        x1[i] = a
        x2[i] = b
        y[i] = h
        if steps > worst:
            worst = steps
    return worst


@njit(cache=True)
def _profile(t):
    # exp(1 - 1/(1 - t^2)) on [0, 1), zero beyond
    if t >= 1.0:
        return 0.0
    return np.exp(1.0 - 1.0 / (1.0 - t * t))


@njit(cache=True)
def orbit_bump_sum(X, y, centers_x, centers_y, u0, out):
    """out[i] = sum_j profile(u(P_i, Q_j) / u0), u = |P - Q|^2 / (2 y_P y_Q).

    X has shape (N, n); centers_x has shape (M, n).
    """
    N = X.shape[0]
    M = centers_x.shape[0]
    n = X.shape[1]
    for i in range(N):
        acc = 0.0
        yi = y[i]
        for j in range(M):
            dy = yi - centers_y[j]
            d2 = dy * dy
            for k in range(n):
                dk = X[i, k] - centers_x[j, k]
                d2 += dk * dk
            u = d2 / (2.0 * yi * centers_y[j])
            if u < u0:
                acc += _profile(u / u0)
        out[i] = acc


@njit(cache=True)
def orbit_bump_sum_binned(X, y, centers_x, centers_y, u0, lo, width, nbins, starts, members, out):
    """orbit_bump_sum with centres pre-sorted into a grid of x-bins over the domain.

    Bin b of axis k covers lo[k] + width[k] * [b, b + 1); members[starts[j]:starts[j+1]]
    are the centres that can reach flattened bin j.  Points outside the grid fall
    back to the full loop.
    """
    N = X.shape[0]
    M = centers_x.shape[0]
    n = X.shape[1]
    for i in range(N):
        flat = 0
        inside = True
        for k in range(n):
            b = int(np.floor((X[i, k] - lo[k]) / width[k]))
            if b == nbins[k]:
                b -= 1
            if b < 0 or b >= nbins[k]:
                inside = False
                break
            flat = flat * nbins[k] + b
        yi = y[i]
        acc = 0.0
        if inside:
            a0 = starts[flat]
            a1 = starts[flat + 1]
        else:
            a0 = 0
            a1 = M
        for t in range(a0, a1):
            j = members[t] if inside else t
            dy = yi - centers_y[j]
            d2 = dy * dy
            for k in range(n):
                dk = X[i, k] - centers_x[j, k]
                d2 += dk * dk
            u = d2 / (2.0 * yi * centers_y[j])
            if u < u0:
                acc += _profile(u / u0)
        out[i] = acc


@njit(cache=True)
def periodized_sum(V, y, s, K, I0, I1):
    """sum_i h(V_i), h(v) = sum_{|lambda|_inf <= K} (|v + lambda|^2 + y^2)^{-s} + far field.

    V has shape (N, n) with n in {1, 2}; each row is first moved into [-1/2, 1/2)^n.
    """
    N = V.shape[0]
    n = V.shape[1]
    y2 = y * y
    total = 0.0 + 0.0j
    for i in range(N):
        v0 = V[i, 0] - np.floor(V[i, 0] + 0.5)
        acc = 0.0 + 0.0j
        if n == 1:
            for a in range(-K, K + 1):
                w = v0 + a
                acc += np.exp(-s * np.log(w * w + y2))
            u2 = v0 * v0
        else:
            v1 = V[i, 1] - np.floor(V[i, 1] + 0.5)
            for a in range(-K, K + 1):
                w0 = v0 + a
                r0 = w0 * w0 + y2
                for b in range(-K, K + 1):
                    w1 = v1 + b
                    acc += np.exp(-s * np.log(r0 + w1 * w1))
            u2 = v0 * v0 + v1 * v1
        far = I0 + (-s * (u2 + y2) + 2.0 * s * (s + 1.0) * u2 / n - s * (2.0 * s + 2.0 - n) / 12.0) * I1
        total += acc + far
    return total


@njit(cache=True)
def periodized_sum_real(V, y, sigma, K, I0, I1):
    """Real-exponent variant of periodized_sum."""
    N = V.shape[0]
    n = V.shape[1]
    y2 = y * y
    total = 0.0
    for i in range(N):
        v0 = V[i, 0] - np.floor(V[i, 0] + 0.5)
        acc = 0.0
        if n == 1:
            for a in range(-K, K + 1):
                w = v0 + a
                acc += (w * w + y2) ** (-sigma)
            u2 = v0 * v0
        else:
            v1 = V[i, 1] - np.floor(V[i, 1] + 0.5)
            for a in range(-K, K + 1):
                w0 = v0 + a
                r0 = w0 * w0 + y2
                for b in range(-K, K + 1):
                    w1 = v1 + b
                    acc += (r0 + w1 * w1) ** (-sigma)
            u2 = v0 * v0 + v1 * v1
        far = I0 + (-sigma * (u2 + y2) + 2.0 * sigma * (sigma + 1.0) * u2 / n - sigma * (2.0 * sigma + 2.0 - n) / 12.0) * I1
        total += acc + far
    return total
