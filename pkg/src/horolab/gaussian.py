"""Small integer helpers for Z and Z[i] (Gaussian integers as (re, im) int pairs)."""
from __future__ import annotations

import math

Gauss = tuple[int, int]

UNITS: tuple[Gauss, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))


def gmul(a: Gauss, b: Gauss) -> Gauss:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def gsub(a: Gauss, b: Gauss) -> Gauss:
    return (a[0] - b[0], a[1] - b[1])


def gnorm(a: Gauss) -> int:
    return a[0] * a[0] + a[1] * a[1]


def _round_div(p: int, q: int) -> int:
    # nearest integer to p/q, q > 0
    return (2 * p + q) // (2 * q)


def gdivmod(a: Gauss, b: Gauss) -> tuple[Gauss, Gauss]:
    """Euclidean division with |remainder|^2 <= |b|^2 / 2."""
    nb = gnorm(b)
    num = gmul(a, (b[0], -b[1]))
    q = (_round_div(num[0], nb), _round_div(num[1], nb))
    return q, gsub(a, gmul(q, b))


def gegcd(a: Gauss, b: Gauss) -> tuple[Gauss, Gauss, Gauss]:
    """(g, x, y) with x a + y b = g."""
    x0, y0, x1, y1 = (1, 0), (0, 0), (0, 0), (1, 0)
    while b != (0, 0):
        q, r = gdivmod(a, b)
        a, b = b, r
        x0, x1 = x1, gsub(x0, gmul(q, x1))
        y0, y1 = y1, gsub(y0, gmul(q, y1))
    return a, x0, y0


def gcoprime(a: Gauss, b: Gauss) -> bool:
    return gnorm(gegcd(a, b)[0]) == 1


def unit_inverse(u: Gauss) -> Gauss:
    return (u[0], -u[1])


def complete_sl2_int(c: int, d: int) -> tuple[int, int]:
    """(a, b) with a d - b c = 1, for coprime integers c, d."""
    g, x, y = _egcd(d, c)  # x d + y c = g = +-1
    if abs(g) != 1:
        raise ValueError(f"({c}, {d}) not coprime")
    return x * g, -y * g


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def complete_sl2_gauss(c: Gauss, d: Gauss) -> tuple[Gauss, Gauss]:
    """(a, b) with a d - b c = 1 in Z[i]."""
    g, x, y = gegcd(d, c)  # x d + y c = g, a unit
    if gnorm(g) != 1:
        raise ValueError(f"{c}, {d} not coprime")
    ginv = unit_inverse(g)
    a = gmul(x, ginv)
    b = gmul((-y[0], -y[1]), ginv)
    return a, b


def coprime_int(a: int, b: int) -> bool:
    return math.gcd(a, b) == 1


def gauss_class_rep(c: Gauss) -> Gauss:
    """Representative of c modulo units: re > 0 and im >= 0."""
    for u in UNITS:
        w = gmul(u, c)
        if w[0] > 0 and w[1] >= 0:
            return w
    return c  # zero


def gcoprime_many(c: Gauss, re, im):
    """Vectorised coprimality of c with each Gaussian integer re + i im."""
    import numpy as np

    a_re = np.full(np.shape(re), c[0], dtype=np.int64)
    a_im = np.full(np.shape(re), c[1], dtype=np.int64)
    b_re = np.array(re, dtype=np.int64)
    b_im = np.array(im, dtype=np.int64)
    while True:
        nb = b_re * b_re + b_im * b_im
        live = nb != 0
        if not live.any():
            break
        # q = round(a conj(b) / |b|^2), r = a - q b
        nr = a_re * b_re + a_im * b_im
        ni = a_im * b_re - a_re * b_im
        safe = np.where(live, nb, 1)
        q_re = np.where(live, (2 * nr + safe) // (2 * safe), 0)
        q_im = np.where(live, (2 * ni + safe) // (2 * safe), 0)
        r_re = a_re - (q_re * b_re - q_im * b_im)
        r_im = a_im - (q_re * b_im + q_im * b_re)
        a_re = np.where(live, b_re, a_re)
        a_im = np.where(live, b_im, a_im)
        b_re = np.where(live, r_re, 0)
        b_im = np.where(live, r_im, 0)
    return a_re * a_re + a_im * a_im == 1
