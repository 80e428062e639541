"""Fusion rings, fusion bimodules and multiplication maps between them.

Conventions. ``N[a, b, c]`` is the coefficient of c in a*b. For a bimodule
with basis xi, ``L[lam][k, i]`` is the coefficient of xi_k in lam*xi_i and
``R[rho][k, i]`` the coefficient of xi_k in xi_i*rho, so matrices act on
coefficient columns. Pairings are the standard inner products of coefficient
vectors, and Frobenius reciprocity moves factors across them:
(xbar_1 x_2, b) = (x_2, x_1 b) and (y_1 ybar_2, b) = (y_1, b y_2).

A multiplication map on a triple (K, L, M) is an integer array ``v[i, j]``
of length dim M giving xi_i * eta_j. The search follows the partial-map
recursion over pairs (i, j) in lexicographic order.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .graphs import BipartiteGraph

__all__ = [
    "FusionError",
    "FusionRing",
    "FusionBimodule",
    "Triple",
    "Pairings",
    "PartialMultMap",
    "MultiplicationMap",
    "ring_from_rules",
    "group_ring",
    "fibonacci_ring",
    "su2_ring",
    "regular_bimodule",
    "builtin_ring",
    "BUILTIN_RINGS",
    "load_fusion_data",
    "ring_to_json",
    "bimodule_to_json",
    "sum_of_squares_decompositions",
    "pairings",
    "initial_map",
    "extend_partial_map",
    "check_conditions",
    "check_associativity",
    "bimodule_automorphisms",
    "find_multiplication_maps",
    "brute_force_multiplication_maps",
    "fusion_graph",
]

DIM_TOL = 1e-10


class FusionError(ValueError):
    """Malformed fusion data or a violated algebraic law."""


def _pf_vector(M: np.ndarray) -> tuple[float, np.ndarray]:
    evals, evecs = np.linalg.eig(M)
    k = int(np.argmax(evals.real))
    vec = np.real(evecs[:, k])
    vec = vec * np.sign(vec[np.argmax(np.abs(vec))])
    return float(evals[k].real), vec


@dataclass(frozen=True)
class FusionRing:
    basis: tuple
    unit: str
    N: np.ndarray = field(repr=False)
    dual: tuple = field(repr=False)
    dims: np.ndarray = field(repr=False)
    name: str = ""

    def idx(self, label) -> int:
        try:
            return self.basis.index(label)
        except ValueError:
            raise FusionError(f"{label!r} is not a basis element of {self.name or 'ring'}") from None

    @property
    def rank(self) -> int:
        return len(self.basis)

    def bar(self, a: int) -> int:
        return self.dual[a]

    def same_as(self, other: "FusionRing") -> bool:
        return (self.basis == other.basis and self.unit == other.unit
                and np.array_equal(self.N, other.N) and self.dual == other.dual)

    def global_dim(self) -> float:
        return float(np.sum(self.dims ** 2))


def ring_from_rules(basis, unit, N, dual, dims=None, name: str = "", tol: float = DIM_TOL) -> FusionRing:
    """Build and validate a ring; ``N`` is an integer array or ``{"a,b": {c: int}}``."""
    basis = tuple(str(b) for b in basis)
    r = len(basis)
    pos = {b: i for i, b in enumerate(basis)}
    if len(pos) != r:
        raise FusionError("duplicate basis labels")
    if str(unit) not in pos:
        raise FusionError(f"unit {unit!r} not in basis")
    if isinstance(N, dict):
        arr = np.zeros((r, r, r), dtype=np.int64)
        for key, row in N.items():
            a, b = (s.strip() for s in str(key).split(","))
            for c, m in row.items():
                try:
                    arr[pos[a], pos[b], pos[str(c)]] = int(m)
                except KeyError as exc:
                    raise FusionError(f"unknown label {exc} in N[{key}]") from None
        N = arr
    N = np.asarray(N, dtype=np.int64)
    if N.shape != (r, r, r):
        raise FusionError(f"N has shape {N.shape}, expected {(r, r, r)}")
    if isinstance(dual, dict):
        dual = tuple(pos[str(dual[b])] for b in basis)
    dual = tuple(int(d) if not isinstance(d, str) else pos[d] for d in dual)
    if dims is None:
        # d(a) d(b) = sum_c N[a,b,c] d(c): d is the PF vector of sum_a N[a]
        _, vec = _pf_vector(N.sum(axis=0).astype(float))
        dims = vec / vec[pos[str(unit)]]
    ring = FusionRing(basis, str(unit), N, dual, np.asarray(dims, dtype=float), name)
    _validate_ring(ring, tol)
    N.setflags(write=False)
    return ring


def _validate_ring(R: FusionRing, tol: float):
    N, r, u = R.N, R.rank, R.idx(R.unit)
    if np.any(N < 0):
        raise FusionError("negative structure constant")
    if sorted(R.dual) != list(range(r)) or any(R.dual[R.dual[a]] != a for a in range(r)):
        raise FusionError("dual is not an involution on the basis")
    eye = np.eye(r, dtype=np.int64)
    if not (np.array_equal(N[u], eye) and np.array_equal(N[:, u, :], eye)):
        raise FusionError("unit law fails")
    d = R.dual
    for a, b, c in itertools.product(range(r), repeat=3):
        if not (N[a, b, c] == N[d[a], c, b] == N[c, d[b], a]):
            names = (R.basis[a], R.basis[b], R.basis[c])
            raise FusionError(f"Frobenius reciprocity fails at {names}")
    lhs = np.einsum("abe,ecf->abcf", N, N)
    rhs = np.einsum("bce,aef->abcf", N, N)
    if not np.array_equal(lhs, rhs):
        raise FusionError("associativity fails")
    dims = R.dims
    if np.any(dims <= 0):
        raise FusionError("dimensions must be positive")
    if np.max(np.abs(np.outer(dims, dims) - N @ dims)) > tol * max(1.0, dims.max() ** 2):
        raise FusionError("dims are not multiplicative: d(a)d(b) != sum_c N[a,b,c] d(c)")


def group_ring(n: int) -> FusionRing:
    """Group ring of Z/n with basis g0..g{n-1}."""
    basis = [f"g{k}" for k in range(n)]
    N = np.zeros((n, n, n), dtype=np.int64)
    for a, b in itertools.product(range(n), repeat=2):
        N[a, b, (a + b) % n] = 1
    return ring_from_rules(basis, "g0", N, [(-a) % n for a in range(n)], name=f"Z{n}")


def fibonacci_ring() -> FusionRing:
    N = np.zeros((2, 2, 2), dtype=np.int64)
    N[0, 0, 0] = N[0, 1, 1] = N[1, 0, 1] = N[1, 1, 0] = N[1, 1, 1] = 1
    return ring_from_rules(["1", "tau"], "1", N, [0, 1], name="fib")


def su2_ring(k: int) -> FusionRing:
    """Truncated Temperley-Lieb rules at level k: basis f0..fk, f1 generates."""
    r = k + 1
    N = np.zeros((r, r, r), dtype=np.int64)
    for a, b, c in itertools.product(range(r), repeat=3):
        if abs(a - b) <= c <= min(a + b, 2 * k - a - b) and (a + b + c) % 2 == 0:
            N[a, b, c] = 1
    return ring_from_rules([f"f{a}" for a in range(r)], "f0", N, list(range(r)), name=f"su2_{k}")


BUILTIN_RINGS = {
    "Z2": lambda: group_ring(2),
    "Z3": lambda: group_ring(3),
    "Z4": lambda: group_ring(4),
    "fib": fibonacci_ring,
    "su2_2": lambda: su2_ring(2),
    "su2_3": lambda: su2_ring(3),
    "su2_4": lambda: su2_ring(4),
}


def builtin_ring(name: str) -> FusionRing:
    try:
        return BUILTIN_RINGS[name]()
    except KeyError:
        raise FusionError(f"unknown built-in ring {name!r}; known: {sorted(BUILTIN_RINGS)}") from None


@dataclass(frozen=True)
class FusionBimodule:
    left: FusionRing
    right: FusionRing
    basis: tuple
    L: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    dims: np.ndarray = field(repr=False)
    name: str = ""

    @property
    def rank(self) -> int:
        return len(self.basis)

    def idx(self, label) -> int:
        try:
            return self.basis.index(label)
        except ValueError:
            raise FusionError(f"{label!r} is not a basis element of {self.name or 'bimodule'}") from None


def _bimodule(left, right, basis, L, R, dims=None, name="", tol=DIM_TOL) -> FusionBimodule:
    basis = tuple(str(b) for b in basis)
    n = len(basis)
    L = np.asarray(L, dtype=np.int64)
    R = np.asarray(R, dtype=np.int64)
    if L.shape != (left.rank, n, n) or R.shape != (right.rank, n, n):
        raise FusionError(f"action shapes {L.shape}, {R.shape} do not match ranks "
                          f"({left.rank}, {right.rank}) and basis size {n}")
    if dims is None:
        # common PF vector of all actions, normalized to sum d^2 = sqrt(dim A dim B)
        tot = L.sum(axis=0) + R.sum(axis=0)
        _, vec = _pf_vector(tot.T.astype(float))
        vec = vec * np.sqrt(np.sqrt(left.global_dim() * right.global_dim()) / np.sum(vec ** 2))
        dims = vec
    mod = FusionBimodule(left, right, basis, L, R, np.asarray(dims, dtype=float), name)
    _validate_bimodule(mod, tol)
    L.setflags(write=False)
    R.setflags(write=False)
    return mod


def _validate_bimodule(M: FusionBimodule, tol: float):
    A, B, L, R = M.left, M.right, M.L, M.R
    n = M.rank
    if np.any(L < 0) or np.any(R < 0):
        raise FusionError("negative action coefficient")
    if not np.array_equal(L[A.idx(A.unit)], np.eye(n)) or not np.array_equal(R[B.idx(B.unit)], np.eye(n)):
        raise FusionError("unit does not act as the identity")
    # lam (mu x) = (lam mu) x ; (x rho) sig = x (rho sig)
    if not np.array_equal(np.einsum("aki,bij->abkj", L, L), np.einsum("abc,ckj->abkj", A.N, L)):
        raise FusionError("left module law fails")
    if not np.array_equal(np.einsum("bki,aij->abkj", R, R), np.einsum("abc,ckj->abkj", B.N, R)):
        raise FusionError("right module law fails")
    if not np.array_equal(np.einsum("aki,bij->abkj", L, R), np.einsum("bki,aij->abkj", R, L)):
        raise FusionError("left and right actions do not commute")
    for mats, ring, side in ((L, A, "left"), (R, B, "right")):
        for a in range(ring.rank):
            if not np.array_equal(mats[a].T, mats[ring.bar(a)]):
                raise FusionError(f"{side} action of {ring.basis[a]!r} violates Frobenius reciprocity")
    d = M.dims
    if np.any(d <= 0):
        raise FusionError("bimodule dimensions must be positive")
    scale = tol * max(1.0, d.max()) * max(1.0, A.dims.max(), B.dims.max())
    if np.max(np.abs(A.dims[:, None] * d[None, :] - np.einsum("aki,k->ai", L, d))) > scale:
        raise FusionError("left dimension compatibility fails")
    if np.max(np.abs(B.dims[:, None] * d[None, :] - np.einsum("aki,k->ai", R, d))) > scale:
        raise FusionError("right dimension compatibility fails")


def regular_bimodule(A: FusionRing) -> FusionBimodule:
    L = np.transpose(A.N, (0, 2, 1))          # L[lam][k, i] = N[lam, i, k]
    R = np.transpose(A.N, (1, 2, 0))          # R[rho][k, i] = N[i, rho, k]
    return _bimodule(A, A, A.basis, L, R, A.dims, name=f"{A.name}_regular")


# ---------------------------------------------------------------- JSON

def ring_to_json(R: FusionRing) -> dict:
    N = {}
    for a, b in itertools.product(range(R.rank), repeat=2):
        row = {R.basis[c]: int(R.N[a, b, c]) for c in range(R.rank) if R.N[a, b, c]}
        if row:
            N[f"{R.basis[a]},{R.basis[b]}"] = row
    return {"name": R.name, "basis": list(R.basis), "unit": R.unit,
            "dual": {R.basis[a]: R.basis[R.bar(a)] for a in range(R.rank)}, "N": N}


def bimodule_to_json(M: FusionBimodule) -> dict:
    return {
        "name": M.name,
        "left": ring_to_json(M.left),
        "right": ring_to_json(M.right),
        "basis": list(M.basis),
        "L": {M.left.basis[a]: M.L[a].tolist() for a in range(M.left.rank)},
        "R": {M.right.basis[a]: M.R[a].tolist() for a in range(M.right.rank)},
        "dims": [repr(float(x)) for x in M.dims],
    }


def _ring_from_obj(obj, base: Path | None) -> FusionRing:
    if isinstance(obj, str):
        if obj in BUILTIN_RINGS:
            return builtin_ring(obj)
        path = Path(obj) if base is None else base / obj
        obj = json.loads(path.read_text())
    try:
        return ring_from_rules(obj["basis"], obj["unit"], obj["N"], obj["dual"],
                               obj.get("dims"), obj.get("name", ""))
    except KeyError as exc:
        raise FusionError(f"ring data missing key {exc}") from None


def _action(obj, ring: FusionRing, n: int, key: str) -> np.ndarray:
    out = np.zeros((ring.rank, n, n), dtype=np.int64)
    if set(obj) != set(ring.basis):
        raise FusionError(f"{key} must give one matrix per basis element of {ring.name or 'ring'}")
    for a, mat in obj.items():
        out[ring.idx(a)] = np.asarray(mat, dtype=np.int64)
    return out


def load_fusion_data(src) -> FusionRing | FusionBimodule:
    """Load a ring or bimodule from a path, a JSON string or a parsed dict.

    Ring schema: ``{basis, unit, dual: {a: abar}, N: {"a,b": {c: int}}, [dims], [name]}``.
    Bimodule schema: ``{left, right, basis, L: {lam: matrix}, R: {rho: matrix}, [dims], [name]}``
    where ``left``/``right`` are ring objects, built-in ring names or paths
    relative to the file.
    """
    base = None
    if isinstance(src, dict):
        obj = src
    else:
        text = str(src)
        if text.lstrip().startswith("{"):
            obj = json.loads(text)
        else:
            path = Path(text)
            try:
                obj = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise FusionError(f"{path}: invalid JSON ({exc})") from None
            base = path.parent
    if not isinstance(obj, dict):
        raise FusionError("fusion data must be a JSON object")
    if "L" in obj or "R" in obj:
        try:
            A = _ring_from_obj(obj["left"], base)
            B = _ring_from_obj(obj["right"], base)
            n = len(obj["basis"])
            L = _action(obj["L"], A, n, "L")
            R = _action(obj["R"], B, n, "R")
        except KeyError as exc:
            raise FusionError(f"bimodule data missing key {exc}") from None
        dims = obj.get("dims")
        dims = None if dims is None else [float(x) for x in dims]
        return _bimodule(A, B, obj["basis"], L, R, dims, obj.get("name", ""))
    return _ring_from_obj(obj, base)


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("commsq") / "data" / name))


# ---------------------------------------------------------------- search

def sum_of_squares_decompositions(N: int, n: int) -> list[tuple]:
    """All length-n nonnegative integer vectors with sum of squares N.

    These are exactly the distinct permutations of the zero-padded vectors
    built from decompositions N = sum b_i a_i^2 with sum b_i <= n. Sorted in
    decreasing lexicographic order.
    """
    N, n = int(N), int(n)
    if N < 0 or n < 1:
        return []
    out = []

    def rec(prefix, rem):
        k = len(prefix)
        if k == n:
            if rem == 0:
                out.append(tuple(prefix))
            return
        a = int(np.floor(np.sqrt(rem)))
        while a >= 0:
            rec(prefix + [a], rem - a * a)
            a -= 1

    rec([], N)
    return out


@dataclass(frozen=True)
class Triple:
    K: FusionBimodule
    L: FusionBimodule
    M: FusionBimodule

    def __post_init__(self):
        K, L, M = self.K, self.L, self.M
        if not K.right.same_as(L.left):
            raise FusionError("K right ring differs from L left ring")
        if not K.left.same_as(M.left) or not L.right.same_as(M.right):
            raise FusionError("M must be a bimodule over (K left ring, L right ring)")

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(itertools.product(range(self.K.rank), range(self.L.rank)))


class Pairings:
    """Integer pairings built from the action matrices of a triple."""

    def __init__(self, t: Triple):
        K, L, M = t.K, t.L, t.M
        self.t = t
        # PK[b][i1, i2] = (xibar_i1 xi_i2, b) = coefficient of xi_i2 in xi_i1 b
        self.PK = np.transpose(K.R, (0, 2, 1))
        # PL[b][j1, j2] = (eta_j1 etabar_j2, b) = coefficient of eta_j1 in b eta_j2
        self.PL = L.L
        # (xibar_i1 xi_i2, eta_j1 etabar_j2)
        self.inner = np.einsum("bik,bjl->ikjl", self.PK, self.PL)
        # ((xi_i1 (eta_j1 etabar_j2) xibar_i2), lam) = sum_b PL[b][j1,j2] (xi_i1 b, lam xi_i2)
        xb_lx = np.einsum("bxi,axk->bika", K.R, K.L)
        self.tripleA = np.einsum("bjl,bika->ijkla", self.PL, xb_lx)
        # ((etabar_j1 (xibar_i1 xi_i2) eta_j2), kap) = sum_b PK[b][i1,i2] (b eta_j2, eta_j1 kap)
        be_ek = np.einsum("byl,cyj->bjlc", L.L, L.R)
        self.tripleC = np.einsum("bik,bjlc->ijklc", self.PK, be_ek)
        # (mu_k1 mubar_k2, lam) and (mubar_k1 mu_k2, kap)
        self.MA = M.L                                  # [lam][k1, k2]
        self.MC = np.transpose(M.R, (0, 2, 1))         # [kap][k1, k2]

    def xi_pair(self, i1, i2, b) -> int:
        return int(self.PK[b, i1, i2])

    def eta_pair(self, j1, j2, b) -> int:
        return int(self.PL[b, j1, j2])


def pairings(K: FusionBimodule, L: FusionBimodule, M: FusionBimodule | None = None) -> Pairings:
    """Pairings for (K, L); M defaults to a placeholder regular bimodule when absent."""
    if M is None:
        if not K.right.same_as(L.left):
            raise FusionError("K right ring differs from L left ring")
        M = _placeholder_M(K, L)
    return Pairings(Triple(K, L, M))


def _placeholder_M(K, L):
    A, C = K.left, L.right
    if not A.same_as(C):
        raise FusionError("pairings without M need K left ring == L right ring")
    return regular_bimodule(A)


@dataclass(frozen=True)
class PartialMultMap:
    frontier: tuple
    v: tuple          # v[(i, j)] as tuples, pairs in lexicographic order up to frontier

    def as_array(self, shape) -> np.ndarray:
        out = np.zeros(shape, dtype=np.int64)
        for (i, j), vec in zip(itertools.product(range(shape[0]), range(shape[1])), self.v):
            out[i, j] = vec
        return out


@dataclass(frozen=True)
class MultiplicationMap:
    v: np.ndarray = field(repr=False)     # shape (l, m, n)
    orbit_size: int = 1

    def key(self) -> tuple:
        return tuple(self.v.ravel().tolist())

    def to_json(self, t: Triple) -> dict:
        rows = {}
        for i, j in t.pairs:
            terms = {t.M.basis[k]: int(c) for k, c in enumerate(self.v[i, j]) if c}
            rows[f"{t.K.basis[i]}*{t.L.basis[j]}"] = terms
        return {"products": rows, "orbit_size": self.orbit_size}


def initial_map() -> PartialMultMap:
    return PartialMultMap((0, 0), ())


def _pair_ok(P: Pairings, v1, p1, v2, p2, skip_c_prime: bool, literal_d: bool) -> bool:
    (i1, j1), (i2, j2) = p1, p2
    v1 = np.asarray(v1)
    v2 = np.asarray(v2)
    if int(v1 @ v2) != P.inner[i1, i2, j1, j2]:                          # (b)
        return False
    if literal_d and int(v1 @ v2) != P.inner[i1, i2, j2, j1]:           # (d), printed index order
        return False
    if not np.array_equal(P.tripleA[i1, j1, i2, j2], np.einsum("k,akl,l->a", v1, P.MA, v2)):  # (c)
        return False
    if not skip_c_prime:                                                 # (c')
        if not np.array_equal(P.tripleC[i1, j1, i2, j2], np.einsum("k,ckl,l->c", v1, P.MC, v2)):
            return False
    return True


def check_conditions(t: Triple, v: np.ndarray, P: Pairings | None = None,
                     skip_c_prime: bool = False, literal_d: bool = False) -> bool:
    """Conditions (a)-(d) at every pair of a complete map ``v[i, j]``."""
    P = P or Pairings(t)
    dK, dL, dM = t.K.dims, t.L.dims, t.M.dims
    l, m, n = v.shape
    V = v.reshape(l * m, n)
    target = np.outer(dK, dL).ravel()
    if np.any(np.abs(V @ dM - target) > DIM_TOL * np.maximum(1.0, target)):       # (a)
        return False
    # pair index p = i*m + j; inner[i1, i2, j1, j2] -> [p1, p2]
    inner = np.transpose(P.inner, (0, 2, 1, 3)).reshape(l * m, l * m)
    gram = V @ V.T
    if not np.array_equal(gram, inner):                                             # (b)
        return False
    if literal_d and not np.array_equal(gram, np.transpose(P.inner, (0, 3, 1, 2)).reshape(l * m, l * m)):
        return False                                                                # (d)
    if not np.array_equal(P.tripleA.reshape(l * m, l * m, -1), np.einsum("pk,akl,ql->pqa", V, P.MA, V)):
        return False                                                                # (c)
    if not skip_c_prime and not np.array_equal(
            P.tripleC.reshape(l * m, l * m, -1), np.einsum("pk,ckl,ql->pqc", V, P.MC, V)):
        return False                                                                # (c')
    return True


def check_associativity(t: Triple, v: np.ndarray) -> bool:
    """(xi rho) eta = xi (rho eta), lam (xi eta) = (lam xi) eta, (xi eta) kap = xi (eta kap)."""
    K, L, M = t.K, t.L, t.M
    # (xi_i rho) eta_j = sum_x R_K[rho][x, i] v[x, j]; xi_i (rho eta_j) = sum_y L_L[rho][y, j] v[i, y]
    if not np.array_equal(np.einsum("rxi,xjk->rijk", K.R, v), np.einsum("ryj,iyk->rijk", L.L, v)):
        return False
    if not np.array_equal(np.einsum("akl,ijl->aijk", M.L, v), np.einsum("axi,xjk->aijk", K.L, v)):
        return False
    if not np.array_equal(np.einsum("ckl,ijl->cijk", M.R, v), np.einsum("cyj,iyk->cijk", L.R, v)):
        return False
    return True


def extend_partial_map(pm: PartialMultMap, t: Triple, P: Pairings | None = None,
                       skip_c_prime: bool = False, literal_d: bool = False) -> list[PartialMultMap]:
    """All extensions of a partial map to the next pair (Steps 1a and 1b)."""
    P = P or Pairings(t)
    pairs = t.pairs
    step = len(pm.v)
    if step >= len(pairs):
        return []
    p, q = pairs[step]
    dM = t.M.dims
    target = t.K.dims[p] * t.L.dims[q]
    out = []
    for cand in sum_of_squares_decompositions(P.inner[p, p, q, q], t.M.rank):
        c = np.array(cand)
        if abs(c @ dM - target) > DIM_TOL * max(1.0, target):           # (a)
            continue
        if not _pair_ok(P, c, (p, q), c, (p, q), skip_c_prime, literal_d):
            continue
        ok = True
        for (i2, j2), v2 in zip(pairs, pm.v):
            if not (_pair_ok(P, c, (p, q), v2, (i2, j2), skip_c_prime, literal_d)
                    and _pair_ok(P, v2, (i2, j2), c, (p, q), skip_c_prime, literal_d)):
                ok = False
                break
        if ok:
            out.append(PartialMultMap((p + 1, q + 1), pm.v + (cand,)))
    return out


def bimodule_automorphisms(M: FusionBimodule) -> list[tuple]:
    """Basis permutations commuting with both actions and preserving dims."""
    n = M.rank
    out = []

    def ok_partial(perm):
        k = len(perm)
        for mats in (M.L, M.R):
            sub = mats[:, :k, :k]
            if not np.array_equal(mats[:, perm][:, :, perm], sub):
                return False
        return True

    def rec(perm, used):
        if len(perm) == n:
            out.append(tuple(perm))
            return
        i = len(perm)
        for c in range(n):
            if c in used or abs(M.dims[c] - M.dims[i]) > DIM_TOL * max(1.0, M.dims[i]):
                continue
            perm.append(c)
            if ok_partial(perm):
                rec(perm, used | {c})
            perm.pop()

    rec([], frozenset())
    return out


def _canonical(v: np.ndarray, autos) -> tuple:
    return min(tuple(v[:, :, list(np.argsort(a))].ravel().tolist()) for a in autos)


def _finalize(t: Triple, raw, modulo_automorphisms: bool) -> list[MultiplicationMap]:
    good = [v for v in raw if check_associativity(t, v)]
    if not modulo_automorphisms:
        return [MultiplicationMap(v) for v in sorted(good, key=lambda a: tuple(a.ravel()), reverse=True)]
    autos = bimodule_automorphisms(t.M)
    classes = {}
    for v in good:
        classes.setdefault(_canonical(v, autos), []).append(v)
    out = []
    for key in sorted(classes, reverse=True):
        rep = max(classes[key], key=lambda a: tuple(a.ravel()))
        out.append(MultiplicationMap(rep, len(classes[key])))
    return out


def find_multiplication_maps(t: Triple, skip_c_prime: bool = False, literal_d: bool = False,
                             modulo_automorphisms: bool = True) -> list[MultiplicationMap]:
    """Depth-first partial-map search followed by the associativity check.

    With ``modulo_automorphisms`` maps differing by a bimodule automorphism of
    M are identified; ``orbit_size`` records how many raw maps each represents.
    """
    P = Pairings(t)
    shape = (t.K.rank, t.L.rank, t.M.rank)
    total = len(t.pairs)
    raw = []
    stack = [initial_map()]
    while stack:
        pm = stack.pop()
        if len(pm.v) == total:
            raw.append(pm.as_array(shape))
            continue
        stack.extend(reversed(extend_partial_map(pm, t, P, skip_c_prime, literal_d)))
    return _finalize(t, raw, modulo_automorphisms)


def brute_force_multiplication_maps(t: Triple, skip_c_prime: bool = False, literal_d: bool = False,
                                    modulo_automorphisms: bool = True, limit: int = 10**6):
    """Oracle: every assignment with entries bounded by condition (a), fully checked."""
    dK, dL, dM = t.K.dims, t.L.dims, t.M.dims
    per_pair = []
    for i, j in t.pairs:
        target = dK[i] * dL[j]
        bounds = [int(np.floor(target / d + 1e-9)) for d in dM]
        cands = [np.array(c) for c in itertools.product(*[range(b + 1) for b in bounds])
                 if abs(np.dot(c, dM) - target) <= DIM_TOL * max(1.0, target)]
        per_pair.append(cands)
    size = int(np.prod([len(c) for c in per_pair], dtype=float))
    if size > limit:
        raise FusionError(f"brute-force space {size} exceeds limit {limit}")
    P = Pairings(t)
    shape = (t.K.rank, t.L.rank, t.M.rank)
    raw = []
    for choice in itertools.product(*per_pair):
        v = np.array(choice, dtype=np.int64).reshape(shape)
        if check_conditions(t, v, P, skip_c_prime, literal_d):
            raw.append(v)
    return _finalize(t, raw, modulo_automorphisms)


# ---------------------------------------------------------------- graphs

def _coeffs(X, ring_or_basis) -> np.ndarray:
    basis = ring_or_basis.basis
    out = np.zeros(len(basis), dtype=np.int64)
    items = X.items() if isinstance(X, dict) else [(X, 1)]
    for lab, c in items:
        if lab not in basis:
            raise FusionError(f"{lab!r} is not a basis element")
        if int(c) < 0:
            raise FusionError("coefficients of X must be nonnegative")
        out[basis.index(lab)] += int(c)
    return out


def fusion_graph(obj, X, triple: Triple | None = None) -> BipartiteGraph:
    """Graph of multiplication by X; entry (i, k) = coefficient of basis k in X * (basis i).

    ``obj`` is a FusionRing (acting on itself), a FusionBimodule (X in its
    left ring) or a MultiplicationMap together with its ``triple`` (X in the
    K basis, acting on the L basis with values in M).
    """
    if isinstance(obj, FusionRing):
        obj = regular_bimodule(obj)
    if isinstance(obj, FusionBimodule):
        c = _coeffs(X, obj.left)
        adj = np.einsum("a,aki->ik", c, obj.L)
        return BipartiteGraph(obj.basis, obj.basis, adj)
    if isinstance(obj, MultiplicationMap):
        if triple is None:
            raise FusionError("a multiplication map needs its triple")
        c = _coeffs(X, triple.K)
        adj = np.einsum("x,xjk->jk", c, obj.v)
        return BipartiteGraph(triple.L.basis, triple.M.basis, adj)
    raise FusionError(f"cannot build a fusion graph from {type(obj).__name__}")
