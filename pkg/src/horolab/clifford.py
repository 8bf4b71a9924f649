"""Clifford algebra C_n with generators i_1, ..., i_{n-1}.

Basis products are indexed by bitmasks: bit k-1 set means i_k occurs in the
product.  Slot 0 is the scalar slot.  Coefficients are float64.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

MEMBERSHIP_TOL = 1e-9


def n_slots(n: int) -> int:
    return 1 << (n - 1)


def grade(mask: int) -> int:
    return bin(mask).count("1")


def _reorder_sign(i: int, j: int) -> int:
    # number of transpositions needed to sort the word (i)(j) into canonical order
    swaps = 0
    i >>= 1
    while i:
        swaps += grade(i & j)
        i >>= 1
    return -1 if swaps & 1 else 1


@lru_cache(maxsize=None)
def product_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Sign and target-slot tables for the product of basis elements."""
    size = n_slots(n)
    sign = np.empty((size, size))
    target = np.empty((size, size), dtype=np.intp)
    for i in range(size):
        for j in range(size):
            s = _reorder_sign(i, j)
            if grade(i & j) & 1:  # each shared generator squares to -1
                s = -s
            sign[i, j] = s
            target[i, j] = i ^ j
    sign.setflags(write=False)
    target.setflags(write=False)
    return sign, target


@lru_cache(maxsize=None)
def involution_signs(n: int) -> dict[str, np.ndarray]:
    g = np.array([grade(m) for m in range(n_slots(n))])
    prime = np.where(g % 2 == 0, 1.0, -1.0)
    star = np.where((g * (g - 1) // 2) % 2 == 0, 1.0, -1.0)
    vec = (g <= 1)
    out = {"prime": prime, "star": star, "bar": prime * star, "vector": vec}
    for v in out.values():
        v.setflags(write=False)
    return out


class CliffordNumber:
    """Element of C_n stored as a dense coefficient vector."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: Sequence[float] | np.ndarray):
        if n < 1:
            raise ValueError("dimension n must be >= 1")
        arr = np.array(coeffs, dtype=float)
        if arr.shape != (n_slots(n),):
            raise ValueError(f"expected {n_slots(n)} coefficients for n={n}, got shape {arr.shape}")
        arr.setflags(write=False)
        self.n = n
        self.coeffs = arr

    # constructors
    @classmethod
    def zero(cls, n: int) -> "CliffordNumber":
        return cls(n, np.zeros(n_slots(n)))

    @classmethod
    def scalar(cls, n: int, value: float) -> "CliffordNumber":
        c = np.zeros(n_slots(n))
        c[0] = value
        return cls(n, c)

    @classmethod
    def basis(cls, n: int, mask: int, value: float = 1.0) -> "CliffordNumber":
        c = np.zeros(n_slots(n))
        c[mask] = value
        return cls(n, c)

    @classmethod
    def from_dict(cls, n: int, items: dict[int, float]) -> "CliffordNumber":
        c = np.zeros(n_slots(n))
        for mask, v in items.items():
            if not 0 <= mask < n_slots(n):
                raise ValueError(f"slot mask {mask} out of range for n={n}")
            c[mask] += v
        return cls(n, c)

    # arithmetic
    def _check(self, other: "CliffordNumber") -> None:
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: C_{self.n} vs C_{other.n}")

    def __add__(self, other):
        if isinstance(other, CliffordNumber):
            self._check(other)
            return CliffordNumber(self.n, self.coeffs + other.coeffs)
        return self + CliffordNumber.scalar(self.n, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, CliffordNumber):
            self._check(other)
            return CliffordNumber(self.n, self.coeffs - other.coeffs)
        return self - CliffordNumber.scalar(self.n, float(other))

    def __rsub__(self, other):
        return CliffordNumber.scalar(self.n, float(other)) - self

    def __neg__(self):
        return CliffordNumber(self.n, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, CliffordNumber):
            return multiply(self, other)
        return CliffordNumber(self.n, self.coeffs * float(other))

    def __rmul__(self, other):
        return CliffordNumber(self.n, self.coeffs * float(other))

    def __truediv__(self, other: float):
        return CliffordNumber(self.n, self.coeffs / float(other))

    def __eq__(self, other):
        if not isinstance(other, CliffordNumber):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.n, self.coeffs.tobytes()))

    def __repr__(self):
        terms = [f"{m}:{v:.6g}" for m, v in enumerate(self.coeffs) if v != 0.0]
        return f"CliffordNumber(n={self.n}, {' '.join(terms) or '0'})"

    # structure
    def prime(self) -> "CliffordNumber":
        return involution_prime(self)

    def star(self) -> "CliffordNumber":
        return involution_star(self)

    def bar(self) -> "CliffordNumber":
        return involution_bar(self)

    def norm(self) -> float:
        return norm(self)

    def norm2(self) -> float:
        return float(self.coeffs @ self.coeffs)

    @property
    def real(self) -> float:
        return float(self.coeffs[0])

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def non_vector_mass(self) -> float:
        mask = ~involution_signs(self.n)["vector"]
        return float(np.sqrt(np.sum(self.coeffs[mask] ** 2)))

    def non_scalar_mass(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs[1:] ** 2)))

    def is_vector(self, tol: float = 0.0) -> bool:
        return self.non_vector_mass() <= tol

    def vector_components(self) -> np.ndarray:
        """(x_0, x_1, ..., x_{n-1}) for x = x_0 + sum x_k i_k."""
        return np.array([self.coeffs[0]] + [self.coeffs[1 << k] for k in range(self.n - 1)])

    def inverse(self) -> "CliffordNumber":
        """Inverse of an element of the Clifford group (uses a abar = |a|^2)."""
        r = self.norm2()
        if r == 0.0:
            raise ZeroDivisionError("zero has no inverse")
        return involution_bar(self) / r


def multiply(a: CliffordNumber, b: CliffordNumber) -> CliffordNumber:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: C_{a.n} vs C_{b.n}")
    sign, target = product_tables(a.n)
    w = np.outer(a.coeffs, b.coeffs) * sign
    out = np.bincount(target.ravel(), weights=w.ravel(), minlength=n_slots(a.n))
    return CliffordNumber(a.n, out)


def product(factors: Iterable[CliffordNumber]) -> CliffordNumber:
    it = iter(factors)
    acc = next(it)
    for f in it:
        acc = multiply(acc, f)
    return acc


def involution_prime(a: CliffordNumber) -> CliffordNumber:
    return CliffordNumber(a.n, a.coeffs * involution_signs(a.n)["prime"])


def involution_star(a: CliffordNumber) -> CliffordNumber:
    return CliffordNumber(a.n, a.coeffs * involution_signs(a.n)["star"])


def involution_bar(a: CliffordNumber) -> CliffordNumber:
    return CliffordNumber(a.n, a.coeffs * involution_signs(a.n)["bar"])


def norm(a: CliffordNumber) -> float:
    return float(np.sqrt(a.coeffs @ a.coeffs))


def vector(components: Sequence[float]) -> CliffordNumber:
    """x_0 + x_1 i_1 + ... + x_{n-1} i_{n-1}; n is len(components)."""
    n = len(components)
    c = np.zeros(n_slots(n))
    c[0] = components[0]
    for k in range(1, n):
        c[1 << (k - 1)] = components[k]
    return CliffordNumber(n, c)


def vector_inverse(x: CliffordNumber) -> CliffordNumber:
    if not x.is_vector(tol=MEMBERSHIP_TOL * (1 + x.norm())):
        raise ValueError("argument is not a vector")
    r = x.norm2()
    if r == 0.0:
        raise ZeroDivisionError("zero vector is not invertible")
    return involution_bar(x) / r


def is_in_clifford_group(a: CliffordNumber, tol: float = MEMBERSHIP_TOL) -> bool:
    """Necessary-condition test a abar = abar a = |a|^2 (heuristic)."""
    r = a.norm2()
    if r <= tol * tol:
        return False
    target = CliffordNumber.scalar(a.n, r)
    abar = involution_bar(a)
    scale = tol * max(1.0, r)
    return bool(
        np.max(np.abs((multiply(a, abar) - target).coeffs)) <= scale
        and np.max(np.abs((multiply(abar, a) - target).coeffs)) <= scale
    )


def random_vector(n: int, rng: np.random.Generator, scale: float = 1.0) -> CliffordNumber:
    return vector(rng.uniform(-scale, scale, size=n))


def random_group_element(n: int, rng: np.random.Generator, factors: int = 3) -> CliffordNumber:
    """Product of random nonzero vectors, so membership in Gamma_n holds by construction."""
    out = CliffordNumber.scalar(n, 1.0)
    for _ in range(factors):
        v = random_vector(n, rng)
        while v.norm() < 1e-3:
            v = random_vector(n, rng)
        out = multiply(out, v)
    return out
