"""2x2 matrices over C_n acting on the boundary R^n and on upper half-space.

A point P = x + y i_n of H^{n+1} is stored as (x in R^n, y > 0).  The action
on H^{n+1} uses the closed forms for x_{g(P)} and y_{g(P)}, so no product in
C_{n+1} is ever formed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .clifford import (
    CliffordNumber,
    is_in_clifford_group,
    multiply,
    random_vector,
    vector,
)

STRUCT_TOL = 1e-9
ALGEBRA_TOL = 1e-10


class _Infinity:
    """The point at infinity of the boundary."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INFINITY"


INFINITY = _Infinity()


@dataclass(frozen=True)
class UpperHalfPoint:
    x: np.ndarray
    y: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float)).copy()
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        if not self.y > 0:
            raise ValueError(f"height must be positive, got {self.y}")
        object.__setattr__(self, "y", float(self.y))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def distance_to(self, other: "UpperHalfPoint") -> float:
        return hyperbolic_distance(self, other)

    def close_to(self, other: "UpperHalfPoint", tol: float = 1e-9) -> bool:
        scale = 1.0 + max(abs(self.y), float(np.max(np.abs(self.x), initial=0.0)))
        return bool(
            np.max(np.abs(self.x - other.x), initial=0.0) <= tol * scale
            and abs(self.y - other.y) <= tol * scale
        )


def point_pair_u(P: UpperHalfPoint, Q: UpperHalfPoint) -> float:
    """|P - Q|^2 / (2 y_P y_Q) = cosh d(P, Q) - 1."""
    d2 = float(np.sum((P.x - Q.x) ** 2)) + (P.y - Q.y) ** 2
    return d2 / (2.0 * P.y * Q.y)


def hyperbolic_distance(P: UpperHalfPoint, Q: UpperHalfPoint) -> float:
    return float(np.arccosh(1.0 + point_pair_u(P, Q)))


@dataclass(frozen=True)
class MoebiusMatrix:
    a: CliffordNumber
    b: CliffordNumber
    c: CliffordNumber
    d: CliffordNumber
    delta: float = field(init=False)

    def __post_init__(self):
        n = self.a.n
        if not (self.b.n == self.c.n == self.d.n == n):
            raise ValueError("entries must share the same dimension")
        det = multiply(self.a, self.d.star()) - multiply(self.b, self.c.star())
        object.__setattr__(self, "delta", det.real)
        object.__setattr__(self, "_det_imag", det.non_scalar_mass())

    @property
    def n(self) -> int:
        return self.a.n

    @classmethod
    def from_real(cls, n: int, a: float, b: float, c: float, d: float) -> "MoebiusMatrix":
        s = CliffordNumber.scalar
        return cls(s(n, a), s(n, b), s(n, c), s(n, d))

    @classmethod
    def identity(cls, n: int) -> "MoebiusMatrix":
        return cls.from_real(n, 1.0, 0.0, 0.0, 1.0)

    @classmethod
    def translation(cls, omega: CliffordNumber) -> "MoebiusMatrix":
        n = omega.n
        return cls(CliffordNumber.scalar(n, 1.0), omega, CliffordNumber.zero(n), CliffordNumber.scalar(n, 1.0))

    @classmethod
    def inversion(cls, n: int) -> "MoebiusMatrix":
        return cls.from_real(n, 0.0, -1.0, 1.0, 0.0)

    @classmethod
    def diagonal(cls, a: CliffordNumber) -> "MoebiusMatrix":
        """(a, 0; 0, (a*)^{-1}) for a in the Clifford group."""
        n = a.n
        return cls(a, CliffordNumber.zero(n), CliffordNumber.zero(n), a.star().inverse())

    def __matmul__(self, other: "MoebiusMatrix") -> "MoebiusMatrix":
        return compose(self, other)

    def __neg__(self):
        return MoebiusMatrix(-self.a, -self.b, -self.c, -self.d)

    def entries(self) -> tuple[CliffordNumber, CliffordNumber, CliffordNumber, CliffordNumber]:
        return (self.a, self.b, self.c, self.d)

    def coefficient_vector(self) -> np.ndarray:
        return np.concatenate([e.coeffs for e in self.entries()])

    def equals(self, other: "MoebiusMatrix", tol: float = ALGEBRA_TOL, projective: bool = True) -> bool:
        u, v = self.coefficient_vector(), other.coefficient_vector()
        scale = tol * (1.0 + np.max(np.abs(u)))
        if np.max(np.abs(u - v)) <= scale:
            return True
        return projective and bool(np.max(np.abs(u + v)) <= scale)

    def is_identity(self, tol: float = ALGEBRA_TOL) -> bool:
        return self.equals(MoebiusMatrix.identity(self.n), tol)

    def __repr__(self):
        return f"MoebiusMatrix(n={self.n}, {format_matrix_literal(self)})"


@dataclass
class Validation:
    ok: bool
    delta: float
    sl: bool
    failure: str | None = None

    def __bool__(self):
        return self.ok


def validate(g: MoebiusMatrix, tol: float = STRUCT_TOL) -> Validation:
    names = ("a", "b", "c", "d")
    for name, e in zip(names, g.entries()):
        if e.norm() > tol and not is_in_clifford_group(e, tol):
            return Validation(False, g.delta, False, f"{name} is not in the Clifford group")
    checks = (
        ("a b*", multiply(g.a, g.b.star())),
        ("c d*", multiply(g.c, g.d.star())),
        ("c* a", multiply(g.c.star(), g.a)),
        ("d* b", multiply(g.d.star(), g.b)),
    )
    for name, e in checks:
        if e.non_vector_mass() > tol * (1.0 + e.norm()):
            return Validation(False, g.delta, False, f"{name} is not a vector")
    if g._det_imag > tol * (1.0 + abs(g.delta)):
        return Validation(False, g.delta, False, "a d* - b c* is not real")
    if abs(g.delta) <= tol:
        return Validation(False, g.delta, False, "a d* - b c* vanishes")
    return Validation(True, g.delta, abs(g.delta - 1.0) <= tol)


def compose(g: MoebiusMatrix, h: MoebiusMatrix) -> MoebiusMatrix:
    m = multiply
    return MoebiusMatrix(
        m(g.a, h.a) + m(g.b, h.c),
        m(g.a, h.b) + m(g.b, h.d),
        m(g.c, h.a) + m(g.d, h.c),
        m(g.c, h.b) + m(g.d, h.d),
    )


def inverse(g: MoebiusMatrix) -> MoebiusMatrix:
    if abs(g.delta) <= STRUCT_TOL:
        raise ValueError("matrix is singular")
    k = 1.0 / g.delta
    return MoebiusMatrix(g.d.star() * k, -g.b.star() * k, -g.c.star() * k, g.a.star() * k)


def act_boundary(g: MoebiusMatrix, x: CliffordNumber, tol: float = STRUCT_TOL):
    den = multiply(g.c, x) + g.d
    if den.norm() <= tol:
        return INFINITY
    return multiply(multiply(g.a, x) + g.b, den.inverse())


def act_boundary_infinity(g: MoebiusMatrix, tol: float = STRUCT_TOL):
    """Image of the point at infinity, a c^{-1}."""
    if g.c.norm() <= tol:
        return INFINITY
    return multiply(g.a, g.c.inverse())


def _as_vector(x: np.ndarray) -> CliffordNumber:
    return vector(x)


def act_upper(g: MoebiusMatrix, P: UpperHalfPoint) -> UpperHalfPoint:
    xv = _as_vector(P.x)
    num = multiply(multiply(g.a, xv) + g.b, (multiply(g.c, xv) + g.d).bar())
    num = num + multiply(g.a, g.c.bar()) * (P.y * P.y)
    den = (multiply(g.c, xv) + g.d).norm2() + g.c.norm2() * P.y * P.y
    x_new = (num / den).vector_components()
    return UpperHalfPoint(x_new, g.delta * P.y / den)


def height_after(g: MoebiusMatrix, P: UpperHalfPoint) -> float:
    xv = _as_vector(P.x)
    den = (multiply(g.c, xv) + g.d).norm2() + g.c.norm2() * P.y * P.y
    return g.delta * P.y / den


def matrix_norm(g: MoebiusMatrix) -> float:
    return float(np.sqrt(sum(e.norm2() for e in g.entries())))


def random_sl(n: int, rng: np.random.Generator, length: int = 4, scale: float = 1.0) -> MoebiusMatrix:
    """Random product of translations, Clifford-group dilations and the inversion."""
    g = MoebiusMatrix.identity(n)
    for _ in range(length):
        kind = rng.integers(3)
        if kind == 0:
            piece = MoebiusMatrix.translation(random_vector(n, rng, scale))
        elif kind == 1:
            v = random_vector(n, rng)
            while not 0.5 <= v.norm() <= 2.0:
                v = random_vector(n, rng, 2.0)
            piece = MoebiusMatrix.diagonal(v)
        else:
            piece = MoebiusMatrix.inversion(n)
        g = compose(g, piece)
    return g


# -- matrix literal text format ------------------------------------------------
#
#   line    := entry '|' entry '|' entry '|' entry
#   entry   := pair (ws pair)*        pairs for the same mask are added
#   pair    := MASK ':' FLOAT          MASK is a decimal bitmask, 0 = scalar
#
# '#' starts a comment; blank lines are ignored.


def format_clifford(x: CliffordNumber) -> str:
    parts = [f"{m}:{v!r}" for m, v in enumerate(x.coeffs.tolist()) if v != 0.0]
    return " ".join(parts) if parts else "0:0.0"


def parse_clifford(text: str, n: int) -> CliffordNumber:
    items: dict[int, float] = {}
    for tok in text.split():
        if ":" not in tok:
            raise ValueError(f"expected mask:coeff, got {tok!r}")
        m, v = tok.split(":", 1)
        mask = int(m)
        items[mask] = items.get(mask, 0.0) + float(v)
    if not items:
        raise ValueError("empty Clifford number")
    return CliffordNumber.from_dict(n, items)


def format_matrix_literal(g: MoebiusMatrix) -> str:
    return " | ".join(format_clifford(e) for e in g.entries())


def parse_matrix_literal(line: str, n: int) -> MoebiusMatrix:
    fields = line.split("#", 1)[0].split("|")
    if len(fields) != 4:
        raise ValueError(f"expected 4 entries separated by '|', got {len(fields)}")
    return MoebiusMatrix(*(parse_clifford(f, n) for f in fields))


def parse_matrix_lines(lines: Sequence[str], n: int) -> list[MoebiusMatrix]:
    out = []
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            out.append(parse_matrix_literal(body, n))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return out
