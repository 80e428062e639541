"""One-parameter family of bi-unitary connections on the 4-stars S(i,i,j,j).

Vertices: center ``A``; arms ``a`` and ``d`` carry the longer length
max(i, j), ``b`` and ``c`` the shorter one. S(i,i,j,j) and S(j,j,i,i) are the
same graph, and only this orientation keeps the arccos argument in [-1, 1].
Black vertices (even distance from ``A``) sit in Z00 and Z11, white ones in
Z10 and Z01. The only 4x4 block is ``u^(A,A)``; it is written as

    alpha1      alpha2      alpha2      alpha3
    alpha2      xi z1       beta z2     alpha2 z3
    alpha2      beta x1     xi x2       alpha2 x3
    alpha3      *           *           *

with x1 = -w conj(z2), x2 = w conj(z1), x3 = -z3, w = e^{is}, z3 = e^{it(s)}.
Everything else is forced: 1x1 blocks are 1 and each arm carries a chain of
rotation blocks whose diagonal phase is propagated from the central block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connection import (
    Connection,
    SquareShape,
    bi_dual,
    block_layout,
    complete_orthonormal,
    verify,
)
from .graphs import make_star, spectral

__all__ = [
    "FourStarConstants",
    "FamilyPoint",
    "FamilyError",
    "fourstar_graph",
    "fourstar_shape",
    "fourstar_constants",
    "t_of_s",
    "family_point",
    "family_connection",
    "family_distinct",
    "index_table",
    "INF_PROXY",
]

INF_PROXY = 60
ARMS = "abcd"


class FamilyError(ValueError):
    """Inconsistent constants or a non-unitary family point."""


@dataclass(frozen=True)
class FourStarConstants:
    i: int
    j: int
    alpha1: float
    alpha2: float
    alpha3: float
    beta: float
    xi: float
    lam: dict

    @property
    def norm_sq(self) -> float:
        return self.lam["_norm"] ** 2

    def normalization_residuals(self) -> tuple[float, float]:
        a1, a2, a3, b, x = self.alpha1, self.alpha2, self.alpha3, self.beta, self.xi
        return (abs(a1**2 + 2 * a2**2 + a3**2 - 1), abs(2 * a2**2 + b**2 + x**2 - 1))


@dataclass(frozen=True)
class FamilyPoint:
    s: float
    t: float
    w: complex
    z1: complex
    z2: complex
    z3: complex
    x1: complex
    x2: complex
    x3: complex
    block: np.ndarray

    def unitarity_residual(self) -> float:
        return float(np.max(np.abs(self.block.conj().T @ self.block - np.eye(4))))


def _arm_lengths(i: int, j: int) -> list[int]:
    lo, hi = sorted((int(i), int(j)))
    return [hi, lo, lo, hi]


def fourstar_graph(i: int, j: int):
    """S(i,i,j,j) with the black vertices on the left."""
    if int(i) < 1 or int(j) < 1:
        raise FamilyError("arm lengths must be positive")
    return make_star(_arm_lengths(int(i), int(j)))


def fourstar_shape(i: int, j: int) -> SquareShape:
    """G vertical on the left, G horizontal at the bottom, G^t on the other two sides."""
    g = fourstar_graph(i, j)
    black, white, adj = g.left_labels, g.right_labels, g.adjacency
    return SquareShape(adj, adj, adj.T, adj.T, black, white, white, black)


def _pf(i: int, j: int) -> dict:
    g = fourstar_graph(i, j)
    sd = spectral(g)
    lam = dict(zip(g.left_labels, sd.pf_left)) | dict(zip(g.right_labels, sd.pf_right))
    lam["_norm"] = sd.norm
    return lam


def fourstar_constants(i: int, j: int, tol: float = 1e-12) -> FourStarConstants:
    lam = _pf(i, j)
    A, a1, b1 = lam["A"], lam["a1"], lam["b1"]
    alpha2 = math.sqrt(a1 * b1) / A
    alpha3 = a1 / A
    beta = b1 / A
    r1 = 1 - 2 * alpha2**2 - alpha3**2
    r2 = 1 - 2 * alpha2**2 - beta**2
    if r1 < -tol or r2 < -tol:
        raise FamilyError(f"normalization leaves negative squares ({r1:.3e}, {r2:.3e})")
    return FourStarConstants(int(i), int(j), math.sqrt(max(r1, 0.0)), alpha2, alpha3,
                             beta, math.sqrt(max(r2, 0.0)), lam)


def _cos_arg(c: FourStarConstants, s: float) -> float:
    return (c.beta**2 - c.xi**2 + c.alpha1**2 * math.cos(s)) / c.alpha3**2


def t_of_s(c: FourStarConstants, s: float, tol: float = 1e-12) -> float:
    """Principal-branch t with |z1| = |z2| = 1."""
    arg = _cos_arg(c, s)
    if abs(arg) > 1 + tol:
        raise FamilyError(f"arccos argument {arg!r} outside [-1, 1]")
    return 0.5 * (s - math.acos(min(1.0, max(-1.0, arg))))


def family_point(c: FourStarConstants, s: float, tol: float = 1e-12) -> FamilyPoint:
    t = t_of_s(c, s, tol)
    w, z3 = np.exp(1j * s), np.exp(1j * t)
    a1, a2, a3, b, xi = c.alpha1, c.alpha2, c.alpha3, c.beta, c.xi
    z1 = -(a1 * (1 + w) + a3 * (z3 - w * np.conj(z3))) / (2 * xi)
    z2 = -(a1 * (1 - w) + a3 * (z3 + w * np.conj(z3))) / (2 * b)
    x1, x2, x3 = -w * np.conj(z2), w * np.conj(z1), -z3
    rows = np.array([
        [a1, a2, a2, a3],
        [a2, xi * z1, b * z2, a2 * z3],
        [a2, b * x1, xi * x2, a2 * x3],
    ], dtype=complex)
    try:
        full = complete_orthonormal(rows, 4, tol=max(tol, 1e-12) * 10)
    except ValueError as exc:
        raise FamilyError(f"first three rows not orthonormal at s={s}: {exc}") from None
    last = full[3]
    last = last * (a3 * abs(last[0]) / last[0]) / abs(last[0])
    block = np.vstack([rows, last])
    pt = FamilyPoint(float(s), float(t), complex(w), complex(z1), complex(z2), complex(z3),
                     complex(x1), complex(x2), complex(x3), block)
    if pt.unitarity_residual() > tol * 10:
        raise FamilyError(f"block not unitary at s={s}")
    return pt


def _arm(label: str, n: int) -> list[str]:
    return ["A"] + [f"{label}{d}" for d in range(1, n + 1)]


def family_connection(i: int, j: int, s: float, tol: float = 1e-10) -> Connection:
    """Full connection for parameter s; raises FamilyError if it fails to verify."""
    c = fourstar_constants(i, j)
    pt = family_point(c, s)
    shape = fourstar_shape(i, j)
    lam = {k: v for k, v in c.lam.items() if not k.startswith("_")}
    layout = block_layout(shape, "u")
    blocks = {cell.key: np.ones((cell.size, cell.size), dtype=complex) for cell in layout}

    def put(cell_key, q, r, value):
        cell = layout[cell_key]
        blocks[cell_key][cell.rows.index((q, 0)), cell.cols.index((r, 0))] = value

    firsts = [f"{x}1" for x in ARMS]
    for a, q in enumerate(firsts):
        for b, r in enumerate(firsts):
            put(("A", "A"), q, r, pt.block[a, b])

    for x, n in zip(ARMS, _arm_lengths(c.i, c.j)):
        v = _arm(x, n)
        diag = pt.block[ARMS.index(x), ARMS.index(x)]
        for m in range(2, n + 1, 2):
            d1 = -(lam[v[m - 2]] / lam[v[m]]) * np.conj(diag)
            key = (v[m], v[m])
            if m == n:
                put(key, v[m - 1], v[m - 1], d1)
                break
            off = math.sqrt(max(0.0, 1 - abs(d1) ** 2))
            put(key, v[m - 1], v[m - 1], d1)
            put(key, v[m - 1], v[m + 1], off)
            put(key, v[m + 1], v[m - 1], off)
            put(key, v[m + 1], v[m + 1], -np.conj(d1))
            diag = -np.conj(d1)

    conn = bi_dual(shape, blocks, lam, lam,
                   meta={"family": "fourstar", "i": c.i, "j": c.j, "s": float(s), "t": pt.t})
    rep = verify(conn, tol)
    if not rep.passed:
        raise FamilyError(f"S({i},{i},{j},{j}) connection fails at s={s}: {rep.failures()}")
    return conn


def family_distinct(i: int, j: int, s1: float, s2: float, tol: float = 1e-10) -> bool:
    """Pointwise distinctness of the central blocks."""
    c = fourstar_constants(i, j)
    b1, b2 = family_point(c, s1).block, family_point(c, s2).block
    return bool(np.max(np.abs(b1 - b2)) > tol)


def _norm_sq(i: int, j: int) -> float:
    # eigenvalue only: PF entries at the ends of long arms underflow
    adj = fourstar_graph(i, j).adjacency.astype(float)
    return float(np.linalg.eigvalsh(adj @ adj.T)[-1])


def index_table(i_max: int, j_max: int, limits: bool = False, proxy: int = INF_PROXY) -> dict:
    """Norm squares of S(i,i,j,j) for 1 <= i <= min(i_max, j), j <= j_max.

    With ``limits`` the row j = inf and the corner (inf, inf) are added, each
    approximated by arm length ``proxy``; keys use ``math.inf``. The returned
    ``"_truncation"`` entry maps those keys to |value(proxy) - value(2 proxy)|.
    """
    out = {}
    for j in range(1, j_max + 1):
        for i in range(1, min(i_max, j) + 1):
            out[(i, j)] = _norm_sq(i, j)
    if limits:
        trunc = {}
        for i in list(range(1, i_max + 1)) + [math.inf]:
            ii = proxy if i == math.inf else i
            val = _norm_sq(ii, proxy)
            ii2 = 2 * proxy if i == math.inf else i
            trunc[(i, math.inf)] = abs(val - _norm_sq(ii2, 2 * proxy))
            out[(i, math.inf)] = val
        out["_truncation"] = trunc
    return out
