"""Commuting-square shapes, connection block layouts, bi-duality and verification.

Orientation used throughout (vertex sets Z00, Z10, Z01, Z11)::

    Z10 --K-- Z11          G: Z00 x Z10   (vertical, left)
     |         |           H: Z00 x Z01   (horizontal, bottom)
     G         L           K: Z10 x Z11   (horizontal, top)
     |         |           L: Z01 x Z11   (vertical, right)
    Z00 --H-- Z01

Two-step path counts: ``G @ K == H @ L`` (paths Z00 -> Z11) and
``G.T @ H == K @ L.T`` (paths Z10 -> Z01). A cell ``(p, s)`` of ``u`` is indexed by
rows ``(q, k)`` (a vertex ``q`` of Z10 next to ``p`` and a K-edge ``k`` from ``q`` to
``s``) and columns ``(r, h)`` (a vertex ``r`` of Z01 next to ``s`` and an H-edge ``h``
from ``p`` to ``r``). A cell ``(q, r)`` of ``v`` has rows ``(p, h)`` and columns
``(s, k)``, and ``v[(q,r)][(p,h),(s,k)] = w(p,q,r,s) * conj(u[(p,s)][(q,k),(r,h)])``.
The vertical graphs ``G`` and ``L`` must be simple (0/1 entries).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import mpmath
import numpy as np
from scipy.optimize import least_squares

from .graphs import BipartiteGraph, from_adjacency, spectral, spectral_mp

__all__ = [
    "ShapeError",
    "SquareShape",
    "Cell",
    "BlockLayout",
    "Connection",
    "VerificationReport",
    "check_nondegenerate",
    "block_layout",
    "weight",
    "bi_dual",
    "dual_back",
    "verify",
    "complete_orthonormal",
    "solve_connection",
    "symmetric_weights",
    "connection_to_json",
    "connection_from_json",
]


class ShapeError(ValueError):
    """Inconsistent or degenerate square shape."""


def _labels(prefix: str, n: int) -> tuple:
    return tuple(f"{prefix}{i}" for i in range(n))


@dataclass(frozen=True)
class SquareShape:
    G: np.ndarray
    H: np.ndarray
    K: np.ndarray
    L: np.ndarray
    z00: tuple = None
    z10: tuple = None
    z01: tuple = None
    z11: tuple = None

    def __post_init__(self):
        mats = {}
        for name in "GHKL":
            m = np.array(getattr(self, name), dtype=np.int64)
            if m.ndim != 2:
                raise ShapeError(f"{name} must be a matrix")
            if np.any(m < 0):
                raise ShapeError(f"{name} has negative entries")
            m.setflags(write=False)
            object.__setattr__(self, name, m)
            mats[name] = m
        G, H, K, L = mats["G"], mats["H"], mats["K"], mats["L"]
        n00, n10 = G.shape
        n01, n11 = L.shape
        if H.shape != (n00, n01) or K.shape != (n10, n11):
            raise ShapeError(
                f"incompatible dimensions G{G.shape} H{H.shape} K{K.shape} L{L.shape}"
            )
        if np.any(G > 1) or np.any(L > 1):
            raise ShapeError("vertical graphs G and L must not have multiple edges")
        defaults = {"z00": ("p", n00), "z10": ("q", n10), "z01": ("r", n01), "z11": ("s", n11)}
        for attr, (prefix, n) in defaults.items():
            labs = getattr(self, attr)
            labs = _labels(prefix, n) if labs is None else tuple(labs)
            if len(labs) != n or len(set(labs)) != n:
                raise ShapeError(f"{attr} needs {n} distinct labels")
            object.__setattr__(self, attr, labs)
        if set(self.z00) & set(self.z10) or set(self.z01) & set(self.z11):
            raise ShapeError("labels of a vertical graph must differ between its two sides")

    @classmethod
    def from_graphs(cls, G: BipartiteGraph, H: BipartiteGraph, K: BipartiteGraph, L: BipartiteGraph):
        if H.left_labels != G.left_labels or K.left_labels != G.right_labels:
            raise ShapeError("graph labels do not line up (G/H left, G right/K left)")
        if L.left_labels != H.right_labels or L.right_labels != K.right_labels:
            raise ShapeError("graph labels do not line up (H right/L left, K right/L right)")
        return cls(G.adjacency, H.adjacency, K.adjacency, L.adjacency,
                   G.left_labels, G.right_labels, L.left_labels, L.right_labels)

    def graph(self, name: str) -> BipartiteGraph:
        sides = {"G": (self.z00, self.z10), "H": (self.z00, self.z01),
                 "K": (self.z10, self.z11), "L": (self.z01, self.z11)}
        left, right = sides[name]
        return BipartiteGraph(left, right, getattr(self, name))

    def to_json(self) -> dict:
        return {
            "G": self.G.tolist(), "H": self.H.tolist(), "K": self.K.tolist(), "L": self.L.tolist(),
            "z00": list(self.z00), "z10": list(self.z10), "z01": list(self.z01), "z11": list(self.z11),
        }

    @classmethod
    def from_json(cls, obj) -> "SquareShape":
        return cls(obj["G"], obj["H"], obj["K"], obj["L"],
                   obj.get("z00"), obj.get("z10"), obj.get("z01"), obj.get("z11"))


def check_nondegenerate(shape: SquareShape) -> bool:
    """Exact check of ``GK == HL`` and ``G^T H == K L^T``."""
    G, H, K, L = (np.asarray(m, dtype=object) for m in (shape.G, shape.H, shape.K, shape.L))
    return bool(np.array_equal(G.dot(K), H.dot(L)) and np.array_equal(G.T.dot(H), K.dot(L.T)))


@dataclass(frozen=True)
class Cell:
    key: tuple
    rows: tuple
    cols: tuple

    @property
    def size(self) -> int:
        return len(self.rows)

    def pairs(self) -> list:
        """Intermediate vertex pairs with their multiplicity dimensions ``(m, n)``."""
        rcount, ccount = {}, {}
        for v, _ in self.rows:
            rcount[v] = rcount.get(v, 0) + 1
        for v, _ in self.cols:
            ccount[v] = ccount.get(v, 0) + 1
        return [((a, b), (rcount[a], ccount[b])) for a in rcount for b in ccount]


@dataclass(frozen=True)
class BlockLayout:
    side: str
    cells: tuple

    @cached_property
    def index(self) -> dict:
        return {c.key: c for c in self.cells}

    def __getitem__(self, key) -> Cell:
        return self.index[key]

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def size_histogram(self) -> dict:
        out = {}
        for c in self.cells:
            out[c.size] = out.get(c.size, 0) + 1
        return dict(sorted(out.items(), reverse=True))


def block_layout(shape: SquareShape, side: str = "u") -> BlockLayout:
    if not check_nondegenerate(shape):
        raise ShapeError("shape is not nondegenerate")
    G, H, K, L = shape.G, shape.H, shape.K, shape.L
    cells = []
    if side == "u":
        for p in range(G.shape[0]):
            for s in range(L.shape[1]):
                rows = tuple((shape.z10[q], k) for q in range(G.shape[1]) if G[p, q]
                             for k in range(K[q, s]))
                cols = tuple((shape.z01[r], h) for r in range(L.shape[0]) if L[r, s]
                             for h in range(H[p, r]))
                if rows:
                    cells.append(Cell((shape.z00[p], shape.z11[s]), rows, cols))
    elif side == "v":
        for q in range(G.shape[1]):
            for r in range(L.shape[0]):
                rows = tuple((shape.z00[p], h) for p in range(G.shape[0]) if G[p, q]
                             for h in range(H[p, r]))
                cols = tuple((shape.z11[s], k) for s in range(L.shape[1]) if L[r, s]
                             for k in range(K[q, s]))
                if rows:
                    cells.append(Cell((shape.z10[q], shape.z01[r]), rows, cols))
    else:
        raise ValueError("side must be 'u' or 'v'")
    for c in cells:
        if len(c.rows) != len(c.cols):
            raise ShapeError(f"cell {c.key} is not square")
    return BlockLayout(side, tuple(cells))


def weight(p, q, r, s, lam: Mapping, eta: Mapping) -> float:
    """``sqrt(lam(p) eta(s) / (lam(q) eta(r)))``."""
    try:
        vals = (lam[p], eta[s], lam[q], eta[r])
    except KeyError as exc:
        raise KeyError(f"no PF value for vertex {exc}") from None
    if min(vals) <= 0:
        raise ValueError("PF values must be positive")
    return float(np.sqrt(vals[0] * vals[1] / (vals[2] * vals[3])))


class _EntryMap:
    """Bijection between entries of the u blocks and entries of the v blocks."""

    def __init__(self, shape: SquareShape):
        self.layout_u = block_layout(shape, "u")
        self.layout_v = block_layout(shape, "v")
        vpos = {}
        for ci, cell in enumerate(self.layout_v.cells):
            q, r = cell.key
            for i, (p, h) in enumerate(cell.rows):
                for j, (s, k) in enumerate(cell.cols):
                    vpos[(p, q, r, s, h, k)] = (ci, i, j)
        quads, upos, vp = [], [], []
        for ci, cell in enumerate(self.layout_u.cells):
            p, s = cell.key
            for i, (q, k) in enumerate(cell.rows):
                for j, (r, h) in enumerate(cell.cols):
                    key = (p, q, r, s, h, k)
                    quads.append(key)
                    upos.append((ci, i, j))
                    vp.append(vpos.pop(key))
        if vpos:
            raise ShapeError("u and v layouts are not in bijection")
        self.quads = quads
        self.upos = np.array(upos, dtype=np.int64).reshape(-1, 3)
        self.vpos = np.array(vp, dtype=np.int64).reshape(-1, 3)
        self.u_sizes = [c.size for c in self.layout_u.cells]
        self.v_sizes = [c.size for c in self.layout_v.cells]

    def __len__(self):
        return len(self.quads)

    def weights(self, lam, eta) -> np.ndarray:
        return np.array([weight(p, q, r, s, lam, eta) for (p, q, r, s, _, _) in self.quads])

    def blocks_from_flat(self, x: np.ndarray, side: str) -> list:
        sizes = self.u_sizes if side == "u" else self.v_sizes
        pos = self.upos if side == "u" else self.vpos
        blocks = [np.zeros((n, n), dtype=x.dtype) for n in sizes]
        for e, (c, i, j) in enumerate(pos):
            blocks[c][i, j] = x[e]
        return blocks

    def flat_from_blocks(self, blocks: Sequence[np.ndarray], side: str) -> np.ndarray:
        pos = self.upos if side == "u" else self.vpos
        return np.array([blocks[c][i, j] for c, i, j in pos], dtype=complex)


_ENTRY_CACHE: dict = {}


def _entry_map(shape: SquareShape) -> _EntryMap:
    key = (shape.G.tobytes(), shape.H.tobytes(), shape.K.tobytes(), shape.L.tobytes(),
           shape.G.shape, shape.L.shape, shape.z00, shape.z10, shape.z01, shape.z11)
    em = _ENTRY_CACHE.get(key)
    if em is None:
        em = _ENTRY_CACHE[key] = _EntryMap(shape)
    return em


@dataclass
class Connection:
    """Blocks of ``u`` and ``v`` together with the PF weights ``lam`` (Z00, Z10) and ``eta`` (Z01, Z11)."""

    shape: SquareShape
    u_blocks: dict
    v_blocks: dict
    lam: dict
    eta: dict
    meta: dict = field(default_factory=dict)

    @property
    def layout_u(self) -> BlockLayout:
        return _entry_map(self.shape).layout_u

    @property
    def layout_v(self) -> BlockLayout:
        return _entry_map(self.shape).layout_v

    def u_entry(self, p, s, q, r, k=0, h=0):
        cell = self.layout_u[(p, s)]
        return self.u_blocks[(p, s)][cell.rows.index((q, k)), cell.cols.index((r, h))]

    def v_entry(self, q, r, p, s, h=0, k=0):
        cell = self.layout_v[(q, r)]
        return self.v_blocks[(q, r)][cell.rows.index((p, h)), cell.cols.index((s, k))]


def symmetric_weights(shape: SquareShape) -> tuple[dict, dict]:
    """PF weights from the symmetric normalization of ``G`` and ``L``."""
    sg = spectral(shape.graph("G"))
    sl = spectral(shape.graph("L"))
    lam = dict(zip(shape.z00, sg.pf_left)) | dict(zip(shape.z10, sg.pf_right))
    eta = dict(zip(shape.z01, sl.pf_left)) | dict(zip(shape.z11, sl.pf_right))
    return lam, eta


def _as_block_list(blocks, layout: BlockLayout) -> list:
    if isinstance(blocks, Mapping):
        missing = [c.key for c in layout.cells if c.key not in blocks]
        if missing:
            raise ShapeError(f"missing blocks for cells {missing}")
        out = [np.asarray(blocks[c.key], dtype=complex) for c in layout.cells]
    else:
        out = [np.asarray(b, dtype=complex) for b in blocks]
        if len(out) != len(layout.cells):
            raise ShapeError("wrong number of blocks")
    for c, b in zip(layout.cells, out):
        if b.shape != (c.size, c.size):
            raise ShapeError(f"block {c.key} has shape {b.shape}, expected {(c.size, c.size)}")
    return out


def bi_dual(shape: SquareShape, u_blocks, lam: Mapping, eta: Mapping, meta=None) -> Connection:
    """Full connection from the ``u`` half via the weighted adjoint relation."""
    em = _entry_map(shape)
    ub = _as_block_list(u_blocks, em.layout_u)
    x = em.flat_from_blocks(ub, "u")
    y = em.weights(lam, eta) * np.conj(x)
    vb = em.blocks_from_flat(y, "v")
    return Connection(
        shape,
        {c.key: b for c, b in zip(em.layout_u.cells, ub)},
        {c.key: b for c, b in zip(em.layout_v.cells, vb)},
        dict(lam), dict(eta), dict(meta or {}),
    )


def dual_back(conn: Connection) -> dict:
    """Recover ``u`` blocks from the ``v`` blocks (inverse of :func:`bi_dual`)."""
    em = _entry_map(conn.shape)
    vb = _as_block_list(conn.v_blocks, em.layout_v)
    y = em.flat_from_blocks(vb, "v")
    x = np.conj(y / em.weights(conn.lam, conn.eta))
    ub = em.blocks_from_flat(x, "u")
    return {c.key: b for c, b in zip(em.layout_u.cells, ub)}


@dataclass
class VerificationReport:
    max_unitarity_residual_u: float
    max_unitarity_residual_v: float
    bidual_residual: float
    nondegenerate: bool
    tolerance: float
    per_block: list

    @property
    def passed(self) -> bool:
        return (self.nondegenerate
                and self.max_unitarity_residual_u <= self.tolerance
                and self.max_unitarity_residual_v <= self.tolerance
                and self.bidual_residual <= self.tolerance)

    def failures(self) -> list:
        return [b for b in self.per_block if b["residual"] > self.tolerance]

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "nondegenerate": self.nondegenerate,
            "max_unitarity_residual_u": self.max_unitarity_residual_u,
            "max_unitarity_residual_v": self.max_unitarity_residual_v,
            "bidual_residual": self.bidual_residual,
            "blocks": self.per_block,
        }


def _unitarity_residual(b: np.ndarray) -> float:
    n = b.shape[0]
    return float(np.max(np.abs(b.conj().T @ b - np.eye(n)))) if n else 0.0


def verify(conn: Connection, tolerance: float = 1e-10) -> VerificationReport:
    nondeg = check_nondegenerate(conn.shape)
    table, ru, rv = [], 0.0, 0.0
    if not nondeg:
        return VerificationReport(np.inf, np.inf, np.inf, False, tolerance, [])
    for side, layout, blocks in (("u", conn.layout_u, conn.u_blocks),
                                 ("v", conn.layout_v, conn.v_blocks)):
        for cell in layout.cells:
            b = blocks.get(cell.key)
            if b is None or np.shape(b) != (cell.size, cell.size):
                res = np.inf
            else:
                res = _unitarity_residual(np.asarray(b, dtype=complex))
            table.append({"side": side, "cell": list(cell.key), "size": cell.size, "residual": res})
            if side == "u":
                ru = max(ru, res)
            else:
                rv = max(rv, res)
    try:
        recomputed = bi_dual(conn.shape, conn.u_blocks, conn.lam, conn.eta)
        bd = max(float(np.max(np.abs(recomputed.v_blocks[k] - np.asarray(conn.v_blocks[k]))))
                 for k in recomputed.v_blocks)
    except (ShapeError, KeyError, ValueError):
        bd = np.inf
    return VerificationReport(ru, rv, bd, nondeg, tolerance, table)


def complete_orthonormal(rows, dim: int, tol: float = 1e-12) -> np.ndarray:
    """Extend orthonormal rows to a unitary by Gram-Schmidt over e_0, e_1, ...

    Candidates that are (numerically) dependent on the rows collected so far
    are skipped.
    """
    rows = [np.asarray(r, dtype=complex).ravel() for r in rows]
    if rows:
        R = np.array(rows)
        if R.shape[1] != dim:
            raise ValueError("row length does not match dim")
        if np.max(np.abs(R @ R.conj().T - np.eye(len(rows)))) > tol:
            raise ValueError("input rows are not orthonormal")
    basis = list(rows)
    for k in range(dim):
        if len(basis) == dim:
            break
        v = np.zeros(dim, dtype=complex)
        v[k] = 1.0
        for _ in range(2):
            for b in basis:
                v = v - (b.conj() @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            basis.append(v / nv)
    out = np.array(basis).reshape(dim, dim)
    if _unitarity_residual(out) > tol:
        raise ValueError("completion failed to be unitary")
    return out


def _block_jac(U: np.ndarray, triu: tuple) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of the upper triangle of ``U^* U - I`` w.r.t. Re/Im of ``U`` entries.

    Returns arrays of shape (len(triu), n*n).
    """
    n = U.shape[0]
    eye = np.eye(n)
    t1 = np.einsum("aj,ib->abij", eye, U)          # E_ji U
    t2 = np.einsum("ia,bj->abij", U.conj(), eye)    # U^* E_ij
    a, b = triu
    d_re = (t1 + t2)[a, b].reshape(len(a), n * n)
    d_im = (1j * (t2 - t1))[a, b].reshape(len(a), n * n)
    return d_re, d_im


def solve_connection(
    shape: SquareShape,
    lam: Mapping,
    eta: Mapping,
    u_pins: Mapping | None = None,
    v_pins: Mapping | None = None,
    real: bool = True,
    init: Mapping | None = None,
    seed: int = 0,
    restarts: int = 20,
    tol: float = 1e-13,
    meta=None,
    drop_conflicting_v: bool = False,
    project_iters: int = 0,
) -> Connection:
    """Complete a bi-unitary connection with some entries held fixed.

    ``u_pins``/``v_pins`` map a cell key to an array of the block's shape
    whose non-NaN entries are fixed; pins on ``v`` are translated to ``u``
    through the bi-duality relation. The free entries are found by a
    Levenberg-Marquardt solve of the unitarity equations of every ``u`` and
    ``v`` block, from a seeded random start (or ``init`` u blocks).

    With ``drop_conflicting_v`` a ``v`` pin block that disagrees with the
    ``u`` pins (for instance because it numbers parallel edges differently)
    is skipped as a whole instead of raising; skipped keys go to ``meta``.
    ``project_iters`` rounds of alternating polar projection precede each
    Levenberg-Marquardt run; they move a random start much closer to the
    solution set.
    """
    em = _entry_map(shape)
    w = em.weights(lam, eta)
    E = len(em)
    fixed = np.full(E, np.nan + 0j)
    dropped: list = []
    for side, pins, pos in (("u", u_pins, em.upos), ("v", v_pins, em.vpos)):
        if not pins:
            continue
        layout = em.layout_u if side == "u" else em.layout_v
        cidx = {c.key: i for i, c in enumerate(layout.cells)}
        lookup = {(c, i, j): e for e, (c, i, j) in enumerate(pos)}
        for key, arr in pins.items():
            arr = np.asarray(arr, dtype=complex)
            ci = cidx[key]
            if arr.shape != (layout.cells[ci].size,) * 2:
                raise ShapeError(f"pin for {side} cell {key} has wrong shape")
            updates = []
            for i, j in zip(*np.nonzero(~np.isnan(arr))):
                e = lookup[(ci, i, j)]
                val = arr[i, j] if side == "u" else np.conj(arr[i, j] / w[e])
                if not np.isnan(fixed[e]) and abs(fixed[e] - val) > 1e-12:
                    if side == "v" and drop_conflicting_v:
                        dropped.append(key)
                        updates = []
                        break
                    raise ShapeError(f"conflicting pinned values for entry {em.quads[e]}")
                updates.append((e, val))
            for e, val in updates:
                fixed[e] = val
    free = np.flatnonzero(np.isnan(fixed))
    base = np.where(np.isnan(fixed), 0, fixed)

    u_triu = [np.triu_indices(n) for n in em.u_sizes]
    v_triu = [np.triu_indices(n) for n in em.v_sizes]
    # per block: entry ids in row-major order
    u_ids = [np.zeros(n * n, dtype=np.int64) for n in em.u_sizes]
    v_ids = [np.zeros(n * n, dtype=np.int64) for n in em.v_sizes]
    for e, (c, i, j) in enumerate(em.upos):
        u_ids[c][i * em.u_sizes[c] + j] = e
    for e, (c, i, j) in enumerate(em.vpos):
        v_ids[c][i * em.v_sizes[c] + j] = e
    col_of = np.full(E, -1)
    col_of[free] = np.arange(len(free))
    nfree = len(free)

    def unpack(z):
        x = base.copy()
        if real:
            x[free] = z
        else:
            x[free] = z[:nfree] + 1j * z[nfree:]
        return x

    def residuals(z):
        x = unpack(z)
        out = []
        for blocks, triu in ((em.blocks_from_flat(x, "u"), u_triu),
                             (em.blocks_from_flat(w * np.conj(x), "v"), v_triu)):
            for B, (a, b) in zip(blocks, triu):
                R = B.conj().T @ B - np.eye(B.shape[0])
                out.append(R[a, b].real)
                if not real:
                    off = a < b
                    out.append(R[a, b][off].imag)
        return np.concatenate(out)

    def jacobian(z):
        x = unpack(z)
        rows = []
        for side, blocks, triu, ids in (("u", em.blocks_from_flat(x, "u"), u_triu, u_ids),
                                        ("v", em.blocks_from_flat(w * np.conj(x), "v"), v_triu, v_ids)):
            for B, tri, eid in zip(blocks, triu, ids):
                d_re, d_im = _block_jac(B, tri)
                cols = col_of[eid]
                mask = cols >= 0
                scale = w[eid] if side == "v" else np.ones(len(eid))
                # chain rule: u-entry x -> block entry (x or w*conj(x))
                if side == "u":
                    g_re, g_im = d_re, d_im
                else:
                    g_re, g_im = d_re * scale, -d_im * scale
                blockrows = []
                J_real = np.zeros((len(tri[0]), nfree if real else 2 * nfree))
                J_real[:, cols[mask]] = g_re[:, mask].real
                if not real:
                    J_real[:, nfree + cols[mask]] = g_im[:, mask].real
                blockrows.append(J_real)
                if not real:
                    off = tri[0] < tri[1]
                    J_imag = np.zeros((int(off.sum()), 2 * nfree))
                    J_imag[:, cols[mask]] = g_re[off][:, mask].imag
                    J_imag[:, nfree + cols[mask]] = g_im[off][:, mask].imag
                    blockrows.append(J_imag)
                rows.extend(blockrows)
        return np.vstack(rows)

    pinned = ~np.isnan(fixed)

    def project(z, iters):
        # alternate polar projections of the u and the v blocks, re-imposing pins
        x = unpack(z)
        for _ in range(iters):
            for ids, n in zip(u_ids, em.u_sizes):
                U, _, Vh = np.linalg.svd(x[ids].reshape(n, n))
                x[ids] = (U @ Vh).ravel()
            y = w * np.conj(x)
            for ids, n in zip(v_ids, em.v_sizes):
                U, _, Vh = np.linalg.svd(y[ids].reshape(n, n))
                y[ids] = (U @ Vh).ravel()
            x = np.conj(y / w)
            x[pinned] = base[pinned]
        xf = x[free]
        return xf.real if real else np.concatenate([xf.real, xf.imag])

    rng = np.random.default_rng(seed)
    init_flat = None
    if init is not None:
        init_flat = em.flat_from_blocks(_as_block_list(init, em.layout_u), "u")
    best = None
    for attempt in range(max(1, restarts)):
        if attempt == 0 and init_flat is not None:
            z0 = init_flat[free].real if real else np.concatenate([init_flat[free].real, init_flat[free].imag])
        else:
            z0 = rng.normal(scale=0.5, size=nfree if real else 2 * nfree)
        if nfree == 0:
            z = z0
        else:
            if project_iters:
                z0 = project(z0, project_iters)
            sol = least_squares(residuals, z0, jac=jacobian, method="lm",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=1000)
            z = sol.x
        res = float(np.max(np.abs(residuals(z))))
        if best is None or res < best[0]:
            best = (res, z)
        if res <= tol:
            break
    res, z = best
    attempts = attempt + 1
    x = unpack(z)
    ub = em.blocks_from_flat(x, "u")
    conn = bi_dual(shape, {c.key: b for c, b in zip(em.layout_u.cells, ub)}, lam, eta, meta)
    conn.meta.setdefault("solver_residual", float(res))
    conn.meta.setdefault("solver_attempts", attempts)
    conn.meta.setdefault("dropped_v_pins", [list(k) for k in dropped])
    conn.meta.setdefault("free_entries", int(nfree))
    return conn


def connection_to_json(conn: Connection, name: str | None = None) -> dict:
    """Serialize a connection (PF weights as 30-digit decimal strings)."""
    lam, eta = _hp_weights(conn)
    out = {
        "name": name or conn.meta.get("name"),
        "orientation": "G:Z00xZ10, H:Z00xZ01, K:Z10xZ11, L:Z01xZ11",
        "shape": conn.shape.to_json(),
        "lambda": lam,
        "eta": eta,
        "u": [], "v": [],
    }
    for side, layout, blocks in (("u", conn.layout_u, conn.u_blocks), ("v", conn.layout_v, conn.v_blocks)):
        for cell in layout.cells:
            b = np.asarray(blocks[cell.key], dtype=complex)
            out[side].append({
                "cell": list(cell.key),
                "rows": [list(r) for r in cell.rows],
                "cols": [list(c) for c in cell.cols],
                "block": [[[repr(float(z.real)), repr(float(z.imag))] for z in row] for row in b],
            })
    return out


def connection_from_json(obj) -> Connection:
    if isinstance(obj, str):
        obj = json.loads(obj)
    shape = SquareShape.from_json(obj["shape"])
    lam = {k: float(v) for k, v in obj["lambda"].items()}
    eta = {k: float(v) for k, v in obj["eta"].items()}
    blocks = {}
    for side in ("u", "v"):
        d = {}
        for entry in obj[side]:
            arr = np.array([[complex(float(re), float(im)) for re, im in row] for row in entry["block"]],
                           dtype=complex).reshape(len(entry["block"]), -1)
            d[tuple(entry["cell"])] = arr
        blocks[side] = d
    return Connection(shape, blocks["u"], blocks["v"], lam, eta, {"name": obj.get("name")})


def _hp_weights(conn: Connection, dps: int = 30) -> tuple[dict, dict]:
    """Decimal strings at ``dps`` digits for the stored PF weights.

    The stored weights are matched to the high-precision PF pair of ``G``
    (resp. ``L``) up to the per-side scaling (symmetric, or either side
    summing its neighbours) and an anchor vertex whose weight is an integer.
    """
    out = []
    for g, left, right, vals in ((conn.shape.graph("G"), conn.shape.z00, conn.shape.z10, conn.lam),
                                 (conn.shape.graph("L"), conn.shape.z01, conn.shape.z11, conn.eta)):
        with mpmath.workdps(dps + 15):
            sigma, pl, pr = spectral_mp(g, dps + 15)
            lf = np.array([vals[x] for x in left]) / np.array([float(v) for v in pl])
            rf = np.array([vals[x] for x in right]) / np.array([float(v) for v in pr])
            ratio = rf[0] / lf[0]
            factor = min((mpmath.mpf(1), sigma, 1 / sigma), key=lambda f: abs(float(f) - ratio))
            if abs(float(factor) - ratio) > 1e-8 * ratio or np.ptp(lf) > 1e-8 * lf[0] or np.ptp(rf) > 1e-8 * rf[0]:
                out.append({k: repr(float(v)) for k, v in vals.items()})
                continue
            full = {x: v for x, v in zip(left, pl)}
            full.update({x: v * factor for x, v in zip(right, pr)})
            anchor = next((x for x in list(left) + list(right)
                           if abs(vals[x] - round(vals[x])) < 1e-12 and round(vals[x]) > 0), left[0])
            scale = mpmath.mpf(round(vals[anchor]) if abs(vals[anchor] - round(vals[anchor])) < 1e-12
                               else vals[anchor]) / full[anchor]
            out.append({x: mpmath.nstr(full[x] * scale, dps, strip_zeros=False) for x in vals})
    return out[0], out[1]
