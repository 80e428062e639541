"""Factorizations G = HK into nonnegative integer matrices without zero lines.

A factorization with middle dimension q is the same thing as a list of q
rank-one pieces ``h_k k_k^T`` (column k of H times row k of K) summing to G.
Reordering the middle index permutes the list, so canonical factorizations
are multisets of pairs (h, k). Each pair satisfies ``h k^T <= G`` entrywise,
which gives the finiteness bounds q <= S and entries <= S (S = sum of G).
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Factorization",
    "FactorizationError",
    "FactorizationCounts",
    "candidate_pairs",
    "enumerate_factorizations",
    "count_factorizations",
    "screen_intermediate",
    "operator_norm_sq",
    "brute_force_factorizations",
]


class FactorizationError(ValueError):
    """Input matrix is not a valid nonnegative integer matrix without zero lines."""


@dataclass(frozen=True)
class Factorization:
    H: np.ndarray
    K: np.ndarray

    @property
    def q(self) -> int:
        return self.H.shape[1]

    def pairs(self) -> tuple:
        return tuple((tuple(self.H[:, k].tolist()), tuple(self.K[k].tolist())) for k in range(self.q))

    def key(self) -> tuple:
        return tuple(sorted(self.pairs()))

    def labeled_count(self) -> int:
        """Number of middle-index orderings giving distinct (H, K)."""
        out = math.factorial(self.q)
        for mult in Counter(self.pairs()).values():
            out //= math.factorial(mult)
        return out

    def to_json(self) -> dict:
        return {"q": self.q, "H": self.H.tolist(), "K": self.K.tolist()}


@dataclass(frozen=True)
class FactorizationCounts:
    canonical: int
    labeled: int


def _check(G) -> np.ndarray:
    G = np.asarray(G)
    if G.ndim != 2 or G.size == 0:
        raise FactorizationError("G must be a nonempty matrix")
    if not np.all(np.equal(np.mod(G, 1), 0)) or np.any(G < 0):
        raise FactorizationError("G must have nonnegative integer entries")
    G = G.astype(np.int64)
    if not G.any(axis=1).all() or not G.any(axis=0).all():
        raise FactorizationError("G has a zero row or column")
    return G


def _from_pairs(pairs) -> Factorization:
    H = np.array([h for h, _ in pairs], dtype=np.int64).T
    K = np.array([k for _, k in pairs], dtype=np.int64)
    H.setflags(write=False)
    K.setflags(write=False)
    return Factorization(H, K)


def _vectors(bounds) -> list:
    """Nonzero integer vectors v with 0 <= v_i <= bounds[i]."""
    rng = [range(int(b) + 1) for b in bounds]
    return [v for v in itertools.product(*rng) if any(v)]


def candidate_pairs(G) -> list:
    """All (h, k) with h, k nonzero and h k^T <= G, sorted by first support cell."""
    G = _check(G)
    out = []
    for h in _vectors(G.max(axis=1)):
        ha = np.array(h)
        rows = np.flatnonzero(ha)
        # k_j <= min over supported rows of G_ij // h_i
        kb = np.min(G[rows] // ha[rows, None], axis=0)
        for k in _vectors(kb):
            out.append((h, k))
    def first_cell(p):
        h, k = p
        return (next(i for i, x in enumerate(h) if x), next(j for j, x in enumerate(k) if x))
    out.sort(key=lambda p: (first_cell(p), p))
    return out


def _search(G: np.ndarray):
    """Yield canonical pair multisets (as sorted lists) summing to G."""
    pairs = candidate_pairs(G)
    mats = [np.outer(h, k) for h, k in pairs]
    firsts = []
    for h, k in pairs:
        firsts.append((next(i for i, x in enumerate(h) if x), next(j for j, x in enumerate(k) if x)))
    n = len(pairs)

    def rec(p, R, chosen):
        nz = np.argwhere(R)
        if len(nz) == 0:
            yield chosen
            return
        # a pair covers a cell only if its first cell precedes it; pairs are sorted
        if p == n or firsts[p] > tuple(nz[0]):
            return
        mult, Rm = 0, R
        while True:
            yield from rec(p + 1, Rm, chosen + [pairs[p]] * mult)
            Rm = Rm - mats[p]
            if np.any(Rm < 0):
                return
            mult += 1

    yield from rec(0, G.copy(), [])


def enumerate_factorizations(G) -> list[Factorization]:
    """Canonical factorizations in deterministic (sorted pair-multiset) order."""
    G = _check(G)
    keys = sorted(tuple(sorted(ch)) for ch in _search(G))
    return [_from_pairs(k) for k in keys]


def count_factorizations(G) -> FactorizationCounts:
    facs = enumerate_factorizations(G)
    return FactorizationCounts(len(facs), sum(f.labeled_count() for f in facs))


def operator_norm_sq(M) -> float:
    M = np.asarray(M, dtype=float)
    return float(np.linalg.norm(M, 2) ** 2)


def screen_intermediate(G, target_norm_sq: float, tol: float = 1e-9,
                        factorizations=None) -> list[Factorization]:
    """Factorizations whose H factor has ||H||^2 within tol of the target."""
    facs = enumerate_factorizations(G) if factorizations is None else factorizations
    return [f for f in facs if abs(operator_norm_sq(f.H) - target_norm_sq) <= tol]


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _rank_one_splits(B: np.ndarray) -> list:
    """All (h, k) of nonnegative integers with h k^T == B."""
    rows, cols = np.flatnonzero(B.any(axis=1)), np.flatnonzero(B.any(axis=0))
    i0, j0 = rows[0], cols[0]
    out = []
    for a in range(1, int(B[i0, j0]) + 1):
        if B[i0, j0] % a:
            continue
        k = np.zeros(B.shape[1], dtype=np.int64)
        h = np.zeros(B.shape[0], dtype=np.int64)
        if np.any(B[i0] % a):
            continue
        k[:] = B[i0] // a
        if np.any(B[:, j0] % k[j0]):
            continue
        h[:] = B[:, j0] // k[j0]
        if np.array_equal(np.outer(h, k), B):
            out.append((tuple(h.tolist()), tuple(k.tolist())))
    return out


def brute_force_factorizations(G) -> set:
    """Oracle: split the S unit entries of G into blocks, keep rank-one blocks.

    Returns the set of canonical keys (sorted pair tuples). Cost grows like
    the Bell number of S, so it is meant for S <= 8.
    """
    G = _check(G)
    units = [(i, j) for i, j in itertools.product(*map(range, G.shape)) for _ in range(G[i, j])]
    seen = set()
    for part in _set_partitions(list(range(len(units)))):
        splits = []
        for block in part:
            B = np.zeros_like(G)
            for u in block:
                B[units[u]] += 1
            s = _rank_one_splits(B)
            if not s:
                break
            splits.append(s)
        else:
            for choice in itertools.product(*splits):
                seen.add(tuple(sorted(choice)))
    return seen
