"""Shared generators for tests: small integer matrices and random connections."""

import itertools

import numpy as np
from hypothesis import assume
from hypothesis import strategies as st
from scipy.stats import unitary_group

from commsq.connection import SquareShape, bi_dual, block_layout, check_nondegenerate
from commsq.fourstar import family_connection
from commsq.graphs import from_adjacency


def _compositions(total, n):
    return [c for c in itertools.product(range(total + 1), repeat=n) if sum(c) == total]


def small_matrices(max_sum: int) -> list[np.ndarray]:
    """One matrix per row/column permutation class, no zero lines, entry sum <= max_sum.

    Every matrix has a doubly lexical ordering, so it is enough to keep the
    matrices whose rows and columns are both lexicographically nonincreasing.
    """
    out = []
    for S in range(1, max_sum + 1):
        for m in range(1, S + 1):
            for n in range(1, S + 1):
                rows = sorted((r for t in range(1, S + 1) for r in _compositions(t, n)), reverse=True)

                def rec(prefix, rem, start):
                    if len(prefix) == m:
                        if rem == 0:
                            G = np.array(prefix)
                            cols = [tuple(c) for c in G.T]
                            if G.any(axis=0).all() and cols == sorted(cols, reverse=True):
                                out.append(G)
                        return
                    for k in range(start, len(rows)):
                        if sum(rows[k]) <= rem:
                            rec(prefix + [rows[k]], rem - sum(rows[k]), k)

                rec([], S, 0)
    return out


def _labels(prefix, n):
    return tuple(f"{prefix}{i}" for i in range(n))


def kron_shape(A: np.ndarray, B: np.ndarray) -> SquareShape:
    """G = L = A (x) I and H = K = I (x) B; nondegenerate for any A, B."""
    a0, a1 = A.shape
    b0, b1 = B.shape
    G = np.kron(A, np.eye(b0, dtype=np.int64))
    H = np.kron(np.eye(a0, dtype=np.int64), B)
    K = np.kron(np.eye(a1, dtype=np.int64), B)
    L = np.kron(A, np.eye(b1, dtype=np.int64))
    return SquareShape(G, H, K, L, _labels("p", a0 * b0), _labels("q", a1 * b0),
                       _labels("r", a0 * b1), _labels("s", a1 * b1))


def graph_shape(A: np.ndarray) -> SquareShape:
    """G = H = A and K = L = A^t, the shape used for the four-star family."""
    m, n = A.shape
    return SquareShape(A, A, A.T, A.T, _labels("p", m), _labels("q", n), _labels("r", n), _labels("s", m))


def total_dimension(shape: SquareShape) -> int:
    return len(shape.z00) + len(shape.z10) + len(shape.z01) + len(shape.z11)


def random_u(shape: SquareShape, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    out = {}
    for cell in block_layout(shape, "u"):
        n = cell.size
        out[cell.key] = unitary_group.rvs(n, random_state=rng) if n > 1 else np.exp(2j * np.pi * rng.random((1, 1)))
    return out


def _matrix(draw, rows, cols, hi, simple=False):
    hi = 1 if simple else hi
    M = np.array(draw(st.lists(st.integers(0, hi), min_size=rows * cols, max_size=rows * cols))).reshape(rows, cols)
    assume(M.any(axis=0).all() and M.any(axis=1).all())
    return M


@st.composite
def random_connections(draw, max_total: int = 12):
    """Random layout-consistent connections: Haar u blocks, positive weights, v by bi-duality.

    One branch uses the bi-unitary four-star family on S(1,1,1,1), which has
    total dimension 10.
    """
    kind = draw(st.sampled_from(["kron", "graph", "fourstar"]))
    seed = draw(st.integers(0, 2**32 - 1))
    if kind == "fourstar":
        s = draw(st.floats(0, 2 * np.pi, allow_nan=False))
        return family_connection(1, 1, s)
    if kind == "kron":
        a0, a1, b0, b1 = (draw(st.integers(1, 3)) for _ in range(4))
        assume((a0 + a1) * (b0 + b1) <= max_total)
        shape = kron_shape(_matrix(draw, a0, a1, 1, simple=True), _matrix(draw, b0, b1, 2))
    else:
        m, n = draw(st.integers(1, 3)), draw(st.integers(1, 3))
        assume(2 * (m + n) <= max_total)
        shape = graph_shape(_matrix(draw, m, n, 1, simple=True))
    assert check_nondegenerate(shape)
    rng = np.random.default_rng(seed)
    lam = {v: float(x) for v, x in zip(shape.z00 + shape.z10, rng.uniform(0.2, 5.0, len(shape.z00) + len(shape.z10)))}
    eta = {v: float(x) for v, x in zip(shape.z01 + shape.z11, rng.uniform(0.2, 5.0, len(shape.z01) + len(shape.z11)))}
    return bi_dual(shape, random_u(shape, seed), lam, eta)


@st.composite
def connected_bipartite(draw, max_side: int = 6, max_mult: int = 3):
    m, n = draw(st.integers(1, max_side)), draw(st.integers(1, max_side))
    A = _matrix(draw, m, n, max_mult)
    g = from_adjacency(_labels("l", m), _labels("r", n), A)
    assume(g.is_connected())
    return g
