"""Cofinite lattices with cusp data: reduction, coset enumeration, invariant height, counting."""
from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .clifford import CliffordNumber, multiply, vector
from .gaussian import (
    complete_sl2_gauss,
    complete_sl2_int,
    gauss_class_rep,
    gcoprime,
    gnorm,
)
from .mobius import (
    INFINITY,
    MoebiusMatrix,
    UpperHalfPoint,
    act_upper,
    compose,
    height_after,
    inverse,
    parse_matrix_lines,
    validate,
)

REDUCE_CAP = 10_000
WORD_CAP = 40
SATURATION_WINDOW = 2
KEY_DIGITS = 7
EDGE = 1e-12


class ReductionError(RuntimeError):
    pass


class SaturationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CuspData:
    index: int
    eta: object
    normalizer: MoebiusMatrix
    basis: np.ndarray  # rows are omega_1..omega_n in R^n
    cell_volume: float
    units: tuple[CliffordNumber, ...]  # e with (c, d) ~ (e c, e d) under the stabilizer
    dual: np.ndarray = field(init=False)
    tau: float = field(init=False)
    mu0: float = field(init=False)

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        dual = np.linalg.inv(basis).T
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "dual", dual)
        object.__setattr__(self, "tau", shortest_vector(basis))
        object.__setattr__(self, "mu0", shortest_vector(dual))

    @property
    def lattice_covolume(self) -> float:
        return abs(float(np.linalg.det(self.basis)))


def shortest_vector(basis: np.ndarray, window: int = 3) -> float:
    n = basis.shape[0]
    best = math.inf
    for m in itertools.product(range(-window, window + 1), repeat=n):
        if any(m):
            best = min(best, float(np.linalg.norm(np.array(m) @ basis)))
    return best


@dataclass(frozen=True)
class Coset:
    """Representative W of a coset in Gamma_eta \\ Gamma, with A_k W = (a b; c d)."""

    matrix: MoebiusMatrix  # W
    normalized: MoebiusMatrix  # A_k W
    c_norm: float
    point: np.ndarray  # -c^{-1} d in R^n


@dataclass(eq=False)
class GroupSpec:
    name: str
    n: int
    generators: tuple[MoebiusMatrix, ...]
    cusps: tuple[CuspData, ...]
    B0: float
    sigma1: float
    domain: Callable[[UpperHalfPoint], bool] | None = None
    covolume: float | None = None
    arithmetic: str | None = None  # "Z" or "Z[i]" for the built-ins
    _memo: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        for g in self.generators:
            v = validate(g)
            if not v:
                raise ValueError(f"generator {g} invalid: {v.failure}")
        if not self.cusps or self.cusps[0].eta is not INFINITY:
            raise ValueError("the first cusp must be infinity")
        if self.domain is None:
            self.domain = lambda P: _greedy_fixed(self, P)

    @property
    def kappa(self) -> int:
        return len(self.cusps)

    def in_domain(self, P: UpperHalfPoint) -> bool:
        return bool(self.domain(P))

    def memo(self, key, compute):
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        value = compute()
        with self._lock:
            self._memo.setdefault(key, value)
            return self._memo[key]


# -- built-in groups -----------------------------------------------------------


def _scalar_unit(n, v):
    return CliffordNumber.scalar(n, v)


def builtin_psl2z() -> GroupSpec:
    T = MoebiusMatrix.from_real(1, 1, 1, 0, 1)
    S = MoebiusMatrix.from_real(1, 0, -1, 1, 0)
    cusp = CuspData(
        index=0,
        eta=INFINITY,
        normalizer=MoebiusMatrix.identity(1),
        basis=np.array([[1.0]]),
        cell_volume=1.0,
        units=(_scalar_unit(1, 1.0), _scalar_unit(1, -1.0)),
    )

    def domain(P: UpperHalfPoint, tol: float = 1e-9) -> bool:
        x = P.x[0]
        return abs(x) <= 0.5 + tol and x * x + P.y * P.y >= 1.0 - tol

    return GroupSpec(
        name="psl2z",
        n=1,
        generators=(T, S),
        cusps=(cusp,),
        B0=2.0,
        sigma1=0.5,
        domain=domain,
        covolume=math.pi / 3.0,
        arithmetic="Z",
    )


CATALAN = 0.915965594177219015054603514932384110774


def builtin_picard() -> GroupSpec:
    one = CliffordNumber.scalar(2, 1.0)
    i1 = CliffordNumber.basis(2, 1)
    zero = CliffordNumber.zero(2)
    T1 = MoebiusMatrix(one, one, zero, one)
    T2 = MoebiusMatrix(one, i1, zero, one)
    U = MoebiusMatrix(i1, zero, zero, -i1)
    S = MoebiusMatrix(zero, -one, one, zero)
    cusp = CuspData(
        index=0,
        eta=INFINITY,
        normalizer=MoebiusMatrix.identity(2),
        basis=np.eye(2),
        cell_volume=0.5,  # the stabilizer also contains x -> -x
        units=(one, -one, i1, -i1),
    )

    def domain(P: UpperHalfPoint, tol: float = 1e-9) -> bool:
        x1, x2 = P.x
        return (
            abs(x1) <= 0.5 + tol
            and -tol <= x2 <= 0.5 + tol
            and x1 * x1 + x2 * x2 + P.y * P.y >= 1.0 - tol
        )

    return GroupSpec(
        name="picard",
        n=2,
        generators=(T1, T2, U, S),
        cusps=(cusp,),
        B0=2.0,
        sigma1=1.0,
        domain=domain,
        covolume=CATALAN / 3.0,
        arithmetic="Z[i]",
    )


BUILTINS = {"psl2z": builtin_psl2z, "picard": builtin_picard}


def get_group(name: str) -> GroupSpec:
    if name in BUILTINS:
        return _builtin_cache(name)
    return load_group(name)


_BUILTIN_INSTANCES: dict[str, GroupSpec] = {}
_BUILTIN_LOCK = threading.Lock()


def _builtin_cache(name: str) -> GroupSpec:
    with _BUILTIN_LOCK:
        if name not in _BUILTIN_INSTANCES:
            _BUILTIN_INSTANCES[name] = BUILTINS[name]()
        return _BUILTIN_INSTANCES[name]


# -- group ingestion -------------------------------------------------------------
#
#   n = 2
#   B0 = 2.0
#   sigma1 = 1.0
#   basis = 1 0 ; 0 1          rows of the cusp lattice basis, ';' separated
#   units = 0:1 ; 0:-1         optional, Clifford numbers, ';' separated
#   name = mygroup             optional
#   ---                        start of generator list (matrix literals)


def load_group(path: str, domain: Callable[[UpperHalfPoint], bool] | None = None) -> GroupSpec:
    with open(path) as fh:
        lines = fh.read().splitlines()
    return parse_group(lines, domain=domain, default_name=path)


def parse_group(lines: Sequence[str], domain=None, default_name: str = "ingested") -> GroupSpec:
    header: dict[str, str] = {}
    body_start = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "---":
            body_start = lineno
            break
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        header[k] = v
    if body_start is None:
        raise ValueError("missing '---' separator before generators")
    try:
        n = int(header["n"])
        B0 = float(header["B0"])
        sigma1 = float(header["sigma1"])
        basis = np.array([[float(t) for t in row.split()] for row in header["basis"].split(";")])
    except KeyError as exc:
        raise ValueError(f"missing header field {exc}") from None
    if basis.shape != (n, n):
        raise ValueError(f"basis must be {n}x{n}")
    from .mobius import parse_clifford

    if "units" in header:
        units = tuple(parse_clifford(u, n) for u in header["units"].split(";"))
    else:
        units = (CliffordNumber.scalar(n, 1.0), CliffordNumber.scalar(n, -1.0))
    gens_lines = [""] * body_start + list(lines[body_start:])
    gens = parse_matrix_lines(gens_lines, n)
    cusp = CuspData(0, INFINITY, MoebiusMatrix.identity(n), basis, abs(float(np.linalg.det(basis))), units)
    return GroupSpec(
        name=header.get("name", default_name),
        n=n,
        generators=tuple(gens),
        cusps=(cusp,),
        B0=B0,
        sigma1=sigma1,
        domain=domain,
    )


# -- reduction -------------------------------------------------------------------


def _translation(vec_x: np.ndarray) -> MoebiusMatrix:
    return MoebiusMatrix.translation(vector(vec_x))


def _cell_shift(G: GroupSpec, P: UpperHalfPoint) -> np.ndarray:
    cusp = G.cusps[0]
    coords = cusp.dual @ P.x
    return np.floor(coords + 0.5) @ cusp.basis


def reduce(G: GroupSpec, P: UpperHalfPoint, cap: int = REDUCE_CAP) -> tuple[UpperHalfPoint, MoebiusMatrix]:
    """Return (W(P), W) with W(P) in the fundamental domain."""
    if G.name == "psl2z":
        return _reduce_psl2z(P, cap)
    if G.name == "picard":
        return _reduce_picard(P, cap)
    return _reduce_greedy(G, P, cap)


def _reduce_psl2z(P, cap):
    x, y = float(P.x[0]), P.y
    W = MoebiusMatrix.identity(1)
    for _ in range(cap):
        k = math.floor(x + 0.5)
        if k:
            W = compose(MoebiusMatrix.from_real(1, 1, -k, 0, 1), W)
            x -= k
        r = x * x + y * y
        if r >= 1.0 - EDGE:
            return UpperHalfPoint([x], y), W
        W = compose(MoebiusMatrix.from_real(1, 0, -1, 1, 0), W)
        x, y = -x / r, y / r
    raise ReductionError(f"reduction did not terminate within {cap} steps")


def _reduce_picard(P, cap):
    a, b = (float(t) for t in P.x)
    h = P.y
    one = CliffordNumber.scalar(2, 1.0)
    i1 = CliffordNumber.basis(2, 1)
    zero = CliffordNumber.zero(2)
    U = MoebiusMatrix(i1, zero, zero, -i1)
    S = MoebiusMatrix(zero, -one, one, zero)
    W = MoebiusMatrix.identity(2)
    for _ in range(cap):
        p, q = math.floor(a + 0.5), math.floor(b + 0.5)
        if p or q:
            W = compose(_translation(np.array([-p, -q], float)), W)
            a, b = a - p, b - q
        if b < 0.0:
            W = compose(U, W)
            a, b = -a, -b
        r = a * a + b * b + h * h
        if r >= 1.0 - EDGE:
            return UpperHalfPoint([a, b], h), W
        W = compose(S, W)
        a, b, h = -a / r, b / r, h / r
    raise ReductionError(f"reduction did not terminate within {cap} steps")


def _non_parabolic(G: GroupSpec) -> list[MoebiusMatrix]:
    def compute():
        out = []
        for g in G.generators:
            for h in (g, inverse(g)):
                if h.c.norm() > 1e-12:
                    out.append(h)
        return out

    return G.memo(("nonparabolic",), compute)


def _greedy_step(G: GroupSpec, P: UpperHalfPoint):
    best, best_h = None, P.y * (1.0 + EDGE)
    for g in _non_parabolic(G):
        h = height_after(g, P)
        if h > best_h:
            best, best_h = g, h
    return best


def _greedy_fixed(G: GroupSpec, P: UpperHalfPoint) -> bool:
    coords = G.cusps[0].dual @ P.x
    if np.any(np.abs(coords) > 0.5 + 1e-9):
        return False
    return _greedy_step(G, P) is None


def _reduce_greedy(G, P, cap):
    W = MoebiusMatrix.identity(G.n)
    for _ in range(cap):
        shift = _cell_shift(G, P)
        if np.any(shift):
            t = _translation(-shift)
            W = compose(t, W)
            P = act_upper(t, P)
        g = _greedy_step(G, P)
        if g is None:
            return P, W
        W = compose(g, W)
        P = act_upper(g, P)
    raise ReductionError(f"reduction did not terminate within {cap} steps")


def reduce_arrays(G: GroupSpec, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized reduction of many points; returns new arrays (X shape (N, n))."""
    X = np.array(X, dtype=float, order="C").reshape(len(Y), G.n)
    Y = np.array(Y, dtype=float)
    if G.name == "psl2z":
        x = np.ascontiguousarray(X[:, 0])
        status = _kernels.reduce_psl2z(x, Y)
        X = x[:, None]
    elif G.name == "picard":
        x1 = np.ascontiguousarray(X[:, 0])
        x2 = np.ascontiguousarray(X[:, 1])
        status = _kernels.reduce_picard(x1, x2, Y)
        X = np.stack([x1, x2], axis=1)
    else:
        out = [reduce(G, UpperHalfPoint(x, y))[0] for x, y in zip(X, Y)]
        return np.array([p.x for p in out]), np.array([p.y for p in out])
    if status < 0:
        raise ReductionError("vectorized reduction hit the step cap")
    return X, Y


# -- cosets ----------------------------------------------------------------------


def _box_arrays(G: GroupSpec, k: int, box):
    if box is None:
        return None
    lo, hi = box
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    if lo.shape != (G.n,) or hi.shape != (G.n,):
        raise ValueError(f"box corners must have length {G.n}")
    return lo, hi


def _in_region(G: GroupSpec, k: int, point: np.ndarray, box) -> bool:
    if box is None:
        coords = G.cusps[k].dual @ point
        return bool(np.all(coords >= -EDGE) and np.all(coords < 1.0 - EDGE))
    lo, hi = box
    return bool(np.all(point >= lo - EDGE) and np.all(point <= hi + EDGE))


def _coset_key(cusp: CuspData, M: MoebiusMatrix) -> tuple:
    best = None
    for u in cusp.units:
        c = multiply(u, M.c).coeffs
        d = multiply(u, M.d).coeffs
        key = tuple(np.round(np.concatenate([c, d]), KEY_DIGITS) + 0.0)
        if best is None or key < best:
            best = key
    return best


def _make_coset(cusp: CuspData, normalized: MoebiusMatrix) -> Coset:
    W = compose(inverse(cusp.normalizer), normalized)
    c, d = normalized.c, normalized.d
    point = -multiply(c.inverse(), d).vector_components()
    return Coset(W, normalized, c.norm(), point)


def region_reach(G: GroupSpec, k: int, box) -> float:
    if box is None:
        corners = np.array(list(itertools.product([0.0, 1.0], repeat=G.n))) @ G.cusps[k].basis
    else:
        lo, hi = box
        corners = np.array(list(itertools.product(*zip(lo, hi))))
    return float(np.max(np.linalg.norm(corners, axis=1)))


def enumerate_cosets_bfs(G: GroupSpec, k: int, c_max: float, box=None, prune_factor: float = 2.0,
                         word_cap: int = WORD_CAP) -> list[Coset]:
    """Breadth-first search over generator words, deduplicated modulo the stabilizer and sign."""
    box = _box_arrays(G, k, box)
    cusp = G.cusps[k]
    reach = max(1.0, region_reach(G, k, box))
    limit = prune_factor * c_max * reach + 1.0
    moves = []
    for g in G.generators:
        moves.extend([g, inverse(g)])
    start = cusp.normalizer
    seen = {_coset_key(cusp, start)}
    frontier = [start]
    found: dict[tuple, Coset] = {}
    last_new = 0
    depth = 0
    while frontier:
        depth += 1
        if depth > word_cap:
            if depth - last_new <= SATURATION_WINDOW:
                raise SaturationError(f"coset enumeration not saturated at word length {word_cap}")
            break
        nxt = []
        for M in frontier:
            for g in moves:
                N = compose(M, g)
                if N.c.norm() > limit or N.d.norm() > limit:
                    continue
                key = _coset_key(cusp, N)
                if key in seen:
                    continue
                seen.add(key)
                nxt.append(N)
                cn = N.c.norm()
                if 1e-9 < cn <= c_max + 1e-9:
                    cos = _make_coset(cusp, N)
                    if _in_region(G, k, cos.point, box):
                        found[key] = cos
                        last_new = depth
        frontier = nxt
    return sorted(found.values(), key=lambda s: (s.c_norm, tuple(s.point)))


def _int_matrix(a, b, c, d):
    return MoebiusMatrix.from_real(1, a, b, c, d)


def _gauss_clifford(z):
    return CliffordNumber(2, [float(z[0]), float(z[1])])


def _gauss_matrix(a, b, c, d):
    f = _gauss_clifford
    return MoebiusMatrix(f(a), f(b), f(c), f(d))


def enumerate_cosets_arithmetic(G: GroupSpec, k: int, c_max: float, box=None) -> list[Coset]:
    """Direct enumeration of coprime bottom rows (built-in groups only)."""
    if G.arithmetic is None or k != 0:
        raise ValueError("arithmetic enumeration needs a built-in group and the cusp at infinity")
    box = _box_arrays(G, k, box)
    cusp = G.cusps[k]
    out = []
    if G.arithmetic == "Z":
        lo, hi = (box if box is not None else (np.array([0.0]), np.array([1.0 - 1e-9])))
        for c in range(1, int(math.floor(c_max + 1e-9)) + 1):
            d_lo = math.ceil(-hi[0] * c - 1e-9)
            d_hi = math.floor(-lo[0] * c + 1e-9)
            for d in range(d_lo, d_hi + 1):
                if math.gcd(c, d) != 1:
                    continue
                a, b = complete_sl2_int(c, d)
                cos = _make_coset(cusp, _int_matrix(a, b, c, d))
                if _in_region(G, k, cos.point, box):
                    out.append(cos)
    else:
        reach = region_reach(G, k, box)
        cm = int(math.floor(c_max + 1e-9))
        for cre in range(0, cm + 1):
            for cim in range(0, cm + 1):
                c = (cre, cim)
                n2 = gnorm(c)
                if n2 == 0 or n2 > c_max * c_max + 1e-9 or gauss_class_rep(c) != c:
                    continue
                dr = int(math.ceil(math.sqrt(n2) * reach)) + 1
                for dre in range(-dr, dr + 1):
                    for dim in range(-dr, dr + 1):
                        d = (dre, dim)
                        if d == (0, 0) and n2 != 1:
                            continue
                        # -d/c
                        p = complex(-dre, -dim) / complex(cre, cim)
                        point = np.array([p.real, p.imag])
                        if not _in_region(G, k, point, box):
                            continue
                        if not gcoprime(c, d):
                            continue
                        a, b = complete_sl2_gauss(c, d)
                        out.append(_make_coset(cusp, _gauss_matrix(a, b, c, d)))
    return sorted(out, key=lambda s: (s.c_norm, tuple(s.point)))


def enumerate_cosets(G: GroupSpec, k: int, c_max: float, box=None, method: str = "auto") -> list[Coset]:
    if c_max <= 0:
        raise ValueError("c_max must be positive")
    if method == "auto":
        method = "arithmetic" if (G.arithmetic and k == 0) else "bfs"
    key = ("cosets", method, k, round(c_max, 9),
           None if box is None else tuple(np.round(np.concatenate([np.ravel(box[0]), np.ravel(box[1])]), 9)))
    if method == "arithmetic":
        return G.memo(key, lambda: enumerate_cosets_arithmetic(G, k, c_max, box))
    if method == "bfs":
        return G.memo(key, lambda: enumerate_cosets_bfs(G, k, c_max, box))
    raise ValueError(f"unknown method {method!r}")


# -- invariant height ------------------------------------------------------------


def invariant_height(G: GroupSpec, P: UpperHalfPoint) -> float:
    """max over cusps k and W in Gamma of y_{A_k W}(P)."""
    Pr, _ = reduce(G, P)
    best = max(height_after(cusp.normalizer, Pr) for cusp in G.cusps)
    tau1 = G.cusps[0].tau
    for k, cusp in enumerate(G.cusps):
        while True:
            c_lim = 1.0 / math.sqrt(Pr.y * best)
            c_min = 1.0 / math.sqrt(tau1 * cusp.tau)
            if c_lim < c_min:
                break
            # candidates satisfy |x + c^{-1} d| < sqrt(y / R) / |c|
            r = math.sqrt(Pr.y / best) / c_min
            box = (Pr.x - r, Pr.x + r)
            improved = False
            for cos in enumerate_cosets(G, k, c_lim, box):
                h = height_after(cos.normalized, Pr)
                if h > best * (1.0 + 1e-12):
                    best, improved = h, True
            if not improved:
                break
    return best


def invariant_height_arrays(G: GroupSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Fast path for the built-ins: the height of the reduced point realizes the maximum."""
    if G.arithmetic is None:
        return np.array([invariant_height(G, UpperHalfPoint(x, y)) for x, y in zip(np.reshape(X, (len(Y), G.n)), Y)])
    _, Yr = reduce_arrays(G, X, Y)
    return Yr


# -- counting --------------------------------------------------------------------


def counting_profile(G: GroupSpec, k: int, X_grid: Sequence[float], box=None, method: str = "auto") -> np.ndarray:
    X_grid = np.asarray(X_grid, float)
    cos = enumerate_cosets(G, k, float(np.max(X_grid)), box, method=method)
    cn = np.sort(np.array([c.c_norm for c in cos]))
    return np.searchsorted(cn, X_grid + 1e-9, side="right")


def count_above(G: GroupSpec, P: UpperHalfPoint, R: float) -> int:
    """#{T in Gamma_inf \\ Gamma : y_{T(P)} > R}, including the identity coset."""
    Pr, _ = reduce(G, P)
    count = int(Pr.y > R)
    c_lim = 1.0 / math.sqrt(Pr.y * R)
    c_min = 1.0 / G.cusps[0].tau
    if c_lim >= c_min:
        r = math.sqrt(Pr.y / R) / c_min
        box = (Pr.x - r, Pr.x + r)
        for cos in enumerate_cosets(G, 0, c_lim, box):
            if height_after(cos.normalized, Pr) > R:
                count += 1
    return count


def separated_subset(points: np.ndarray, r: float) -> np.ndarray:
    """Greedy maximal subset with pairwise distances >= r."""
    keep: list[np.ndarray] = []
    for p in points:
        if all(np.linalg.norm(p - q) >= r for q in keep):
            keep.append(p)
    return np.array(keep).reshape(-1, points.shape[1] if points.ndim == 2 else 1)


def min_pairwise_distance(points: np.ndarray) -> float:
    pts = np.asarray(points, float)
    if len(pts) < 2:
        return math.inf
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.sqrt(np.sum(diff**2, axis=-1))
    d[np.diag_indices(len(pts))] = math.inf
    return float(np.min(d))
