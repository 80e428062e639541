"""The four explicit double-broom and quipu connections.

Each constructor pins the entries fixed by the construction (sign choices for
the 1x1 blocks, closed-form columns and rows, rotation-type 2x2 blocks and the
orthonormal completions), then fills whatever the bi-unitary condition leaves
open with :func:`solve_connection`, over R when that converges and over C
otherwise. Free entries are not unique; only the pinned ones and the
invariants are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from .connection import (
    Connection,
    ShapeError,
    connection_to_json,
    SquareShape,
    block_layout,
    check_nondegenerate,
    complete_orthonormal,
    solve_connection,
    verify,
)

__all__ = [
    "CatalogEntry",
    "CATALOG_NAMES",
    "small_broom_shape",
    "medium_broom_shape",
    "large_broom_shape",
    "quipu_shape",
    "small_broom_connection",
    "medium_broom_connection",
    "large_broom_connection",
    "quipu_connection",
    "large_broom_t0",
    "large_broom_identities",
    "quipu_constants",
    "quipu_identities",
    "catalog_entry",
    "catalog_json",
    "PinSet",
]

CATALOG_NAMES = ("small_broom", "medium_broom", "large_broom", "quipu")


@dataclass
class CatalogEntry:
    name: str
    shape: SquareShape
    connection: Connection
    identities: dict = field(default_factory=dict)

    def max_identity_residual(self) -> float:
        return max((abs(v) for v in self.identities.values()), default=0.0)


class PinSet:
    """Label-addressed partial blocks for :func:`solve_connection`.

    A row or column selector is either a vertex label (all multiplicity
    copies, in order) or a ``(label, k)`` pair. ``None`` leaves an entry free.
    """

    def __init__(self, shape: SquareShape):
        self.shape = shape
        self.layouts = {"u": block_layout(shape, "u"), "v": block_layout(shape, "v")}
        self.arrays = {
            side: {c.key: np.full((c.size, c.size), np.nan) for c in lay.cells}
            for side, lay in self.layouts.items()
        }

    @staticmethod
    def _expand(selectors, available):
        out = []
        for sel in selectors:
            if isinstance(sel, tuple):
                if sel not in available:
                    raise ShapeError(f"{sel} is not an index of this cell")
                out.append(available.index(sel))
            else:
                hits = [i for i, (v, _) in enumerate(available) if v == sel]
                if not hits:
                    raise ShapeError(f"vertex {sel!r} does not index this cell")
                out.extend(hits)
        return out

    def set(self, side: str, a, b, rows, cols, values):
        try:
            cell = self.layouts[side][(a, b)]
        except KeyError:
            raise ShapeError(f"no {side} cell {(a, b)}") from None
        ri = self._expand(rows, cell.rows)
        ci = self._expand(cols, cell.cols)
        vals = np.array([[np.nan if x is None else float(x) for x in row] for row in values])
        if vals.shape != (len(ri), len(ci)):
            raise ShapeError(f"values for {side}{(a, b)} have shape {vals.shape}, "
                             f"expected {(len(ri), len(ci))}")
        arr = self.arrays[side][(a, b)]
        for i, r in enumerate(ri):
            for j, c in enumerate(ci):
                if np.isnan(vals[i, j]):
                    continue
                if not np.isnan(arr[r, c]) and abs(arr[r, c] - vals[i, j]) > 1e-12:
                    raise ShapeError(f"conflicting pins in {side}{(a, b)} at {(r, c)}")
                arr[r, c] = vals[i, j]

    def u(self, p, s, rows, cols, values):
        self.set("u", p, s, rows, cols, values)

    def v(self, q, r, rows, cols, values):
        self.set("v", q, r, rows, cols, values)

    def swap(self, side, a, b, axis, label):
        """Exchange the two parallel-edge copies of ``label`` in the rows or columns of a cell."""
        cell = self.layouts[side][(a, b)]
        idx = cell.rows if axis == "rows" else cell.cols
        hits = [i for i, (v, _) in enumerate(idx) if v == label]
        if len(hits) != 2:
            raise ShapeError(f"{label!r} does not index exactly two copies in {side}{(a, b)}")
        arr = self.arrays[side][(a, b)]
        if axis == "rows":
            arr[hits] = arr[hits[::-1]]
        else:
            arr[:, hits] = arr[:, hits[::-1]]

    def one(self, side, a, b, value):
        """Pin a 1x1 block."""
        cell = self.layouts[side][(a, b)]
        if cell.size != 1:
            raise ShapeError(f"{side}{(a, b)} is {cell.size}x{cell.size}, not 1x1")
        self.set(side, a, b, [cell.rows[0]], [cell.cols[0]], [[value]])

    def pinned(self) -> tuple[dict, dict]:
        def keep(d):
            return {k: a for k, a in d.items() if not np.all(np.isnan(a))}
        return keep(self.arrays["u"]), keep(self.arrays["v"])

    def count(self) -> int:
        return int(sum(np.count_nonzero(~np.isnan(a))
                       for d in self.arrays.values() for a in d.values()))


SOLVE_TOL = 1e-13


def _finish(name, shape, lam, pins: PinSet, identities, seed=0, init=None, meta=None,
            drop_conflicting_v=False, real=True) -> CatalogEntry:
    """Complete the pinned entries; a failed real completion falls back to C."""
    u_pins, v_pins = pins.pinned()
    meta = dict(meta or {})
    meta["name"] = name
    kw = dict(init=init, seed=seed, drop_conflicting_v=drop_conflicting_v, tol=SOLVE_TOL)
    conn = None
    if real:
        conn = solve_connection(shape, lam, lam, u_pins, v_pins, real=True, restarts=6,
                                meta=dict(meta, field="real"), **kw)
    if conn is None or conn.meta["solver_residual"] > SOLVE_TOL:
        conn = solve_connection(shape, lam, lam, u_pins, v_pins, real=False, restarts=20,
                                meta=dict(meta, field="complex"), **kw)
    return CatalogEntry(name, shape, conn, identities)


def _broom_labels(black, white):
    return tuple(black), tuple(white)


# ---------------------------------------------------------------- small broom

def small_broom_shape() -> SquareShape:
    black = ("A", "B")
    white = ("a3", "a2", "a1", "a0", "b1", "b2", "b3")
    G = [[1, 1, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 1, 1]]
    H = [[3, 1], [1, 3]]
    K = [[0, 1, 1, 1, 0, 0, 0],
         [1, 0, 1, 1, 0, 0, 0],
         [1, 1, 1, 0, 1, 0, 0],
         [1, 1, 0, 2, 0, 1, 1],
         [0, 0, 1, 0, 1, 1, 1],
         [0, 0, 0, 1, 1, 0, 1],
         [0, 0, 0, 1, 1, 1, 0]]
    return SquareShape(G, H, K, G, black, white, black, white)


def _small_lambda() -> dict:
    lam = {"A": 5.0, "B": 5.0, "a0": 2.0}
    lam.update({x: 1.0 for x in ("a3", "a2", "a1", "b1", "b2", "b3")})
    return lam


@lru_cache(maxsize=None)
def _small_broom() -> CatalogEntry:
    shape = small_broom_shape()
    pins = PinSet(shape)
    for side in ("u", "v"):
        for cell in pins.layouts[side].cells:
            if cell.size == 1:
                pins.one(side, *cell.key, 1.0)
    h = 1 / np.sqrt(2)
    pins.u("A", "a0", ["a3", "a2", "a0"], ["A"],
           [[0, 0, h], [0, 0, -h], [1, 0, 0], [0, 1, 0]])
    pins.u("A", "a0", ["a0"], ["B"], [[0], [0]])
    pins.u("B", "a0", ["a0", "b2", "b3"], ["B"],
           [[0, 1, 0], [0, 0, 1], [-h, 0, 0], [h, 0, 0]])
    pins.u("B", "a0", ["a0"], ["A"], [[0], [0]])
    pins.v("a0", "A", ["A"], ["a3", "a2"], [[0, 0], [0, 0], [h, -h]])
    pins.v("a0", "A", ["B"], ["a0"], [[0, 0]])
    pins.v("a0", "B", ["B"], ["b2", "b3"], [[-h, h], [0, 0], [0, 0]])
    pins.v("a0", "B", ["A"], ["a0"], [[0, 0]])
    return _finish("small_broom", shape, _small_lambda(), pins, {})


def small_broom_connection() -> CatalogEntry:
    return _small_broom()


# --------------------------------------------------------------- medium broom

def medium_broom_shape() -> SquareShape:
    black = ("A1", "A0", "B1")
    white = ("a3", "a2", "a1", "a0", "b0", "b1", "b2", "b3")
    G = [[1, 1, 1, 1, 0, 0, 0, 0], [0, 0, 0, 1, 1, 0, 0, 0], [0, 0, 0, 0, 1, 1, 1, 1]]
    H = [[2, 1, 1], [1, 1, 1], [1, 1, 2]]
    K = [[1, 0, 0, 1, 0, 0, 0, 1],
         [0, 1, 0, 1, 0, 0, 1, 0],
         [0, 0, 2, 0, 1, 0, 0, 0],
         [1, 1, 0, 1, 1, 1, 0, 0],
         [0, 0, 1, 1, 1, 0, 1, 1],
         [0, 0, 0, 1, 0, 2, 0, 0],
         [0, 1, 0, 0, 1, 0, 1, 0],
         [1, 0, 0, 0, 1, 0, 0, 1]]
    return SquareShape(G, H, K, G, black, white, black, white)


def _medium_lambda() -> dict:
    r3 = np.sqrt(3.0)
    lam = {"A1": 3 + r3, "B1": 3 + r3, "A0": 2 * r3, "a0": r3, "b0": r3}
    lam.update({x: 1.0 for x in ("a3", "a2", "a1", "b1", "b2", "b3")})
    return lam


def _medium_side(pins: PinSet, lam: dict, c: str, v: str, leaves, center0="A0"):
    """Pins for one half of the medium broom; returns the alpha rows."""
    i3, i2 = leaves
    x = np.sqrt(lam[i3] * lam[center0] / (lam[c] * lam[v + "0"]))
    x0 = np.sqrt(1 - 2 * x * x)
    col = np.array([x, x, x0])
    basis = complete_orthonormal([col], 3).real
    U = np.column_stack([basis[1], basis[2], col])
    pins.u(c, v + "0", [i3, i2, v + "0"], [c, center0], U)
    alpha = {i3: U[0, :2], i2: U[1, :2], v + "0": U[2, :2]}
    sq = np.sqrt(lam[v + "0"])
    for leaf in (i3, i2):
        a1, a2 = alpha[leaf]
        pins.u(c, leaf, [leaf, v + "0"], [c], sq * np.array([[a2, -a1], [a1, a2]]))
        pins.v(leaf, c, [c], [leaf, v + "0"], sq * np.array([[a2, a1], [-a1, a2]]))
        pins.one("u", center0, leaf, 1.0)
        pins.one("v", leaf, center0, 1.0)
    return alpha


def medium_alpha_identities(alpha: dict, side="a") -> dict:
    """Inner products of the alpha rows of the 3x3 block against their closed forms."""
    r3 = np.sqrt(3.0)
    a3, a2, a0 = alpha[f"{side}3"], alpha[f"{side}2"], alpha[f"{side}0"]
    cross0 = np.sqrt((-5 + 3 * r3) / 3)
    vals = {
        "<alpha3,alpha2> + (3-sqrt3)/3": a3 @ a2 + (3 - r3) / 3,
        "|alpha3|^2 - sqrt3/3": a3 @ a3 - r3 / 3,
        "|alpha2|^2 - sqrt3/3": a2 @ a2 - r3 / 3,
        "<alpha3,alpha0> + sqrt((-5+3sqrt3)/3)": a3 @ a0 + cross0,
        "<alpha2,alpha0> + sqrt((-5+3sqrt3)/3)": a2 @ a0 + cross0,
        "|alpha0|^2 - (6-2sqrt3)/3": a0 @ a0 - (6 - 2 * r3) / 3,
    }
    return {f"{side}: {k}": float(v) for k, v in vals.items()}


@lru_cache(maxsize=None)
def _medium_broom() -> CatalogEntry:
    shape = medium_broom_shape()
    lam = _medium_lambda()
    pins = PinSet(shape)
    alpha_a = _medium_side(pins, lam, "A1", "a", ("a3", "a2"))
    alpha_b = _medium_side(pins, lam, "B1", "b", ("b3", "b2"))
    ids = medium_alpha_identities(alpha_a, "a")
    ids.update(medium_alpha_identities(alpha_b, "b"))
    return _finish("medium_broom", shape, lam, pins, ids, seed=1)


def medium_broom_connection() -> CatalogEntry:
    return _medium_broom()


# ---------------------------------------------------------------- large broom

def large_broom_shape() -> SquareShape:
    black = ("A2", "A1", "A0", "B1", "B2")
    white = ("a4", "a3", "a2", "a1", "a0", "b0", "b1", "b2", "b3", "b4")
    G = [[1, 1, 1, 1, 0, 0, 0, 0, 0, 0],
         [0, 0, 0, 1, 1, 0, 0, 0, 0, 0],
         [0, 0, 0, 0, 1, 1, 0, 0, 0, 0],
         [0, 0, 0, 0, 0, 1, 1, 0, 0, 0],
         [0, 0, 0, 0, 0, 0, 1, 1, 1, 1]]
    H = [[3, 2, 1, 1, 2],
         [2, 0, 1, 1, 1],
         [1, 1, 0, 1, 1],
         [1, 1, 1, 0, 2],
         [2, 1, 1, 2, 3]]
    K = [[0, 0, 1, 2, 0, 1, 0, 0, 0, 2],
         [0, 1, 1, 1, 1, 0, 1, 0, 1, 0],
         [1, 1, 0, 1, 1, 0, 1, 1, 0, 0],
         [2, 1, 1, 1, 1, 1, 1, 1, 1, 0],
         [0, 1, 1, 1, 0, 1, 1, 0, 0, 1],
         [1, 0, 0, 1, 1, 0, 1, 1, 1, 0],
         [0, 1, 1, 1, 1, 1, 1, 1, 1, 2],
         [0, 0, 1, 1, 0, 1, 1, 0, 1, 1],
         [0, 1, 0, 1, 0, 1, 1, 1, 1, 0],
         [2, 0, 0, 0, 1, 0, 2, 1, 0, 0]]
    return SquareShape(G, H, K, G, black, white, black, white)


_R17 = np.sqrt(17.0)


def _large_lambda() -> dict:
    lam = {"A2": (5 + _R17) / 2, "a1": (-1 + _R17) / 2, "A1": (1 + _R17) / 2,
           "a0": 1.0, "A0": 2.0}
    for x in ("a2", "a3", "a4"):
        lam[x] = 1.0
    for k, v in list(lam.items()):
        if k != "A0":
            lam[k.replace("a", "b").replace("A", "B")] = v
    return lam


def large_broom_t0() -> float:
    """Root of <g2, xi3>(0, t) near 5.3873: 2 pi - arctan(sqrt((-1 + sqrt 17) / 2))."""
    return float(2 * mpmath.pi - mpmath.atan(mpmath.sqrt((-1 + mpmath.sqrt(17)) / 2)))


def _unit(v):
    return v / np.linalg.norm(v)


def _large_vectors(s: float, t: float) -> dict:
    """The vectors of the 5x5-block construction at parameters (s, t)."""
    S = np.sqrt
    lam = _large_lambda()
    x1 = np.array([S(5 - _R17) / 2, 0.0, S(-1 + _R17) / 2])
    x2 = np.array([-S((-11 + 3 * _R17) / 4), S((-3 + _R17) / 2), S(21 - 5 * _R17) / 2])
    x3 = np.array([S((5 - _R17) / 2), S((5 - _R17) / 2), -S(-4 + _R17)])
    q1 = np.cos(s) * x1 + np.sin(s) * x2
    q2 = -np.sin(s) * x1 + np.cos(s) * x2
    c = S(lam["a0"] / lam["a1"])
    kappa = S((7 - _R17) / (1 + _R17))
    order = ("a3", "a2", "a1")
    alpha = {a: np.array([c * q2[i], -c * q1[i]]) for i, a in enumerate(order)}
    xi = {a: np.array([-kappa * alpha[a][0], -kappa * alpha[a][1], x3[i]]) for i, a in enumerate(order)}
    g2 = np.array([np.cos(t), np.sin(t), 0.0])
    g1 = np.array([-np.sin(t), np.cos(t), 0.0])
    g3 = S(lam["a1"] / lam["a3"]) * np.cross(g2, xi["a3"])
    f3 = _unit(np.cross(g3, xi["a2"]))
    h1 = np.cross(g3, f3)
    # sign fixed so the first row of u^(A2,a4) matches the displayed choice at s = 0
    f4 = _unit(np.cross(f3, xi["a2"]))
    return {"x1": x1, "x2": x2, "x3": x3, "q1": q1, "q2": q2, "alpha": alpha, "xi": xi,
            "g1": g1, "g2": g2, "g3": g3, "f3": f3, "h1": h1, "f4": f4}


def large_broom_identities(s: float, t: float | None = None) -> dict:
    """F_1..F_3 and G_ij at (s, t); ``t`` defaults to the line ``s + t = t0``."""
    if t is None:
        t = large_broom_t0() - s
    vec = _large_vectors(s, t)
    la1 = _large_lambda()["a1"]
    h1, g1, xi1, f4 = vec["h1"], vec["g1"], vec["xi"]["a1"], vec["f4"]
    c = np.sqrt((-45 + 11 * _R17) / 16)
    out = {
        "F1": float(h1 @ g1 / la1 + (-3 + _R17) / 4),
        "F2": float(h1 @ xi1 / np.sqrt(la1) + c),
        "F3": float(g1 @ xi1 / np.sqrt(la1) - c),
    }
    for i in range(3):
        for j in range(i, 3):
            if i == j:
                val = (1 - f4[i] ** 2 + h1[i] ** 2 + g1[i] ** 2) / la1 + xi1[i] ** 2 - 1
            else:
                val = (-f4[i] * f4[j] + h1[i] * h1[j] + g1[i] * g1[j]) / la1 + xi1[i] * xi1[j]
            out[f"G{i + 1}{j + 1}"] = float(val)
    out["<g2,xi3>"] = float(vec["g2"] @ vec["xi"]["a3"])
    return out


_MIRROR_LARGE = {"A2": "B2", "A1": "B1", "A0": "A0", "B1": "A1", "B2": "A2",
                 **{f"a{i}": f"b{i}" for i in range(5)}, **{f"b{i}": f"a{i}" for i in range(5)}}


class _Mirrored:
    """Applies every pin both as given and with labels mirrored."""

    def __init__(self, pins: PinSet, mapping: dict):
        self.pins, self.m = pins, mapping

    def _map(self, sels):
        return [(self.m[x[0]], x[1]) if isinstance(x, tuple) else self.m[x] for x in sels]

    def set(self, side, a, b, rows, cols, values):
        self.pins.set(side, a, b, rows, cols, values)
        self.pins.set(side, self.m[a], self.m[b], self._map(rows), self._map(cols), values)

    def one(self, side, a, b, value):
        self.pins.one(side, a, b, value)
        self.pins.one(side, self.m[a], self.m[b], value)


_LARGE_ETA0 = np.array([
    [(3 - _R17) / 2, 0.0, np.sqrt((-11 + 3 * _R17) / 2)],
    [-np.sqrt((-101 + 29 * _R17) / 32), (-1 + _R17) / 8, -np.sqrt((31 - 7 * _R17) / 8)],
])
_LARGE_V0 = np.array([
    [-np.sqrt((-19 + 5 * _R17) / 8), (-9 + _R17) / 8, np.sqrt((-169 + 41 * _R17) / 32),
     np.sqrt((-1 + _R17) / 8), -np.sqrt(29 - 7 * _R17) / 2],
    [0.0, np.sqrt((-1 + _R17) / 32), (-9 + _R17) / 8, 0.5, np.sqrt(-3 + _R17) / 2],
    [np.sqrt((5 - _R17) / 2), -np.sqrt((-11 + 3 * _R17) / 8), -np.sqrt((31 - 7 * _R17) / 8),
     0.0, -np.sqrt(-4 + _R17)],
    [np.sqrt((-3 + _R17) / 8), -np.sqrt(5 - _R17) / 2, np.sqrt((-3 + _R17) / 8), 0.0, 1 / np.sqrt(2)],
    [np.sqrt(5 - _R17) / 2, np.sqrt((-3 + _R17) / 8), np.sqrt(5 - _R17) / 2,
     np.sqrt((7 - _R17) / 8), -np.sqrt((-4 + _R17) / 2)],
])


def _large_pins(s: float) -> tuple[PinSet, dict]:
    shape = large_broom_shape()
    lam = _large_lambda()
    S = np.sqrt
    t = large_broom_t0() - s
    vec = _large_vectors(s, t)
    pins = PinSet(shape)
    m = _Mirrored(pins, _MIRROR_LARGE)
    g, w = S((1 + _R17) / 8), S((7 - _R17) / 8)
    xi, alpha = vec["xi"], vec["alpha"]
    rows51 = [[g, 0, 0, w, 0], [0, g, 0, 0, w]] + [list(xi[a]) + list(alpha[a]) for a in ("a3", "a2", "a1")]
    m.set("u", "A2", "a1", [("a4", 0), ("a4", 1), "a3", "a2", "a1"], ["A2", "A1"], rows51)
    m.set("v", "a4", "A1", ["A2"], ["a1"], [[1, 0], [0, 1]])
    for a in ("a3", "a2", "a1"):
        f = S(lam["A2"] * lam["a1"] / (lam[a] * lam["A1"]))
        a1, a2 = alpha[a]
        m.set("v", a, "A1", ["A2"], ["a1", "a0"], [[f * a1, -f * a2], [f * a2, f * a1]])
    A0col = [vec["x3"][0], vec["x3"][1], vec["x3"][2]]
    m.set("u", "A2", "a0", ["a3", "a2", "a1"], ["A1", "A0"],
          np.column_stack([vec["q1"], vec["q2"], A0col]))
    m.one("v", "a3", "A0", 1.0)
    m.one("v", "a2", "A0", 1.0)
    m.set("v", "a4", "A2", ["A2"], ["a2", "a1"], [[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    ct, st = np.cos(t), np.sin(t)
    m.set("u", "A2", "a2", ["a4", "a3", "a1"], ["A2"], [[0, 0, 1], [ct, st, 0], [-st, ct, 0]])
    m.set("u", "A2", "a3", ["a3", "a2", "a1"], ["A2"], [vec["g3"], vec["f3"], vec["h1"]])
    if s == 0.0:
        # the displayed completions at s = 0
        m.set("u", "A2", "a4", ["a2", "a1"], ["A2"], np.vstack([vec["f4"], _LARGE_ETA0]))
        m.set("v", "a1", "A2", ["A2", "A1"], ["a4", "a3", "a2", "a1"], _LARGE_V0)
    else:
        eta = complete_orthonormal([vec["f4"]], 3).real
        m.set("u", "A2", "a4", ["a2", "a1"], ["A2"], eta)
    m.one("u", "A0", "a3", -1.0)
    m.one("u", "A0", "a2", 1.0)
    # the a3/a2 entries of this row follow from the two 1x1 choices above
    m.set("v", "a0", "A2", ["A0"], ["a1"], [[S(-4 + _R17)]])
    ids = large_broom_identities(s, t)
    return pins, ids


@lru_cache(maxsize=64)
def _large_broom(s: float) -> CatalogEntry:
    pins, ids = _large_pins(s)
    # every displayed entry is real, but the free entries are completed over C:
    # the real completion problem has only spurious local minima for the solver
    return _finish("large_broom", large_broom_shape(), _large_lambda(), pins, ids,
                   meta={"s": s, "t": large_broom_t0() - s}, real=False)


def large_broom_connection(s: float = 0.0) -> CatalogEntry:
    return _large_broom(float(s))


# ---------------------------------------------------------------------- quipu

def quipu_shape() -> SquareShape:
    black = ("A3", "A2", "A1", "A0", "A-1", "A-2", "A-3")
    white = ("a4", "a3", "a2", "a1", "a0", "a-1", "a-2", "a-3", "a-4")
    G = [[1, 0, 0, 0, 0, 0, 0, 0, 0],
         [1, 1, 1, 0, 0, 0, 0, 0, 0],
         [0, 0, 1, 1, 0, 0, 0, 0, 0],
         [0, 0, 0, 1, 1, 1, 0, 0, 0],
         [0, 0, 0, 0, 0, 1, 1, 0, 0],
         [0, 0, 0, 0, 0, 0, 1, 1, 1],
         [0, 0, 0, 0, 0, 0, 0, 0, 1]]
    H = [[0, 0, 1, 0, 1, 0, 0],
         [0, 1, 1, 2, 1, 1, 0],
         [1, 1, 1, 2, 1, 1, 1],
         [0, 2, 2, 2, 2, 2, 0],
         [1, 1, 1, 2, 1, 1, 1],
         [0, 1, 1, 2, 1, 1, 0],
         [0, 0, 1, 0, 1, 0, 0]]
    K = [[0, 0, 1, 1, 0, 1, 1, 0, 0],
         [0, 1, 0, 1, 0, 1, 0, 1, 0],
         [1, 0, 1, 1, 2, 1, 1, 0, 1],
         [1, 1, 1, 2, 0, 2, 1, 1, 1],
         [0, 0, 2, 0, 2, 0, 2, 0, 0],
         [1, 1, 1, 2, 0, 2, 1, 1, 1],
         [1, 0, 1, 1, 2, 1, 1, 0, 1],
         [0, 1, 0, 1, 0, 1, 0, 1, 0],
         [0, 0, 1, 1, 0, 1, 1, 0, 0]]
    return SquareShape(G, H, K, G, black, white, black, white)


@lru_cache(maxsize=None)
def _quipu_mp(dps: int = 40) -> dict:
    """t, the PF values (lambda(A0) = 1) and the cascade constants at ``dps`` digits."""
    with mpmath.workdps(dps):
        t = max(r.real for r in mpmath.polyroots([1, -8, 17, -5], maxsteps=200, extraprec=2 * dps))
        L = {
            "a0": mpmath.mpf(1), "A0": mpmath.mpf(1),
            "a1": (t - 1) / 2, "A1": (t - 3) / 2,
            "a2": (t ** 2 - 4 * t + 1) / 2, "A2": (t ** 2 - 5 * t + 4) / 2,
            "a3": (t ** 2 - 5 * t + 4) / 2, "A3": (t ** 3 - 7 * t ** 2 + 13 * t - 5) / (2 * t),
            "a4": (t ** 3 - 7 * t ** 2 + 13 * t - 5) / 2,
        }
        sq = mpmath.sqrt
        c = {"t": t}
        c["x1"] = sq(L["A3"] * L["a2"] / (L["a4"] * L["A1"]))
        c["y1"] = sq(L["A3"] * L["a1"] / (L["a4"] * L["A1"]))
        c["x2"] = sq(L["a4"] / L["a2"])
        c["y2"] = sq(L["A3"] * L["a1"] / (L["A2"] * L["a2"]))
        c["x4"] = sq(L["A2"] * L["a4"] / (L["A1"] * L["a2"]))
        c["z4"] = sq(1 - c["x4"] ** 2)
        c["x3"] = sq(L["a2"] * L["A3"] / (L["A2"] * L["a1"]))
        c["y3"] = sq(L["a3"] * L["A1"] / (L["A2"] * L["a1"]))
        c["z3"] = sq(L["a2"] * L["A1"] / (L["A2"] * L["a1"])) * c["z4"]
        c["x5"] = sq(L["A2"] * L["a4"] / (L["A1"] * L["a1"]))
        c["y5"] = sq(1 - c["x5"] ** 2)
        c["y4"] = sq((L["A1"] * L["a1"] - L["A2"] * L["a4"]) / (L["A0"] * L["a2"]))
        c["x6"] = sq(L["A2"] * L["a4"] / (L["A0"] * L["a1"]))
        c["y6"] = sq(L["A1"] / L["A0"])
        c["f_alpha4"] = sq(L["A2"] * L["a1"] / (L["a4"] * L["A0"]))
        c["f_beta4"] = sq(L["A2"] * L["a1"] / (L["a3"] * L["A0"]))
        c["f_gamma4"] = sq(L["A2"] * L["a1"] / (L["a2"] * L["A0"]))
        c["f_X"] = sq(L["A0"] * L["a2"] / (L["a0"] * L["A2"]))
        c["f_Y"] = sq(L["A0"] * L["a2"] / (L["a0"] * L["A1"]))
        return {"lambda": L, "const": c}


def quipu_constants() -> dict:
    """Double-precision copies of the quipu PF values and cascade constants."""
    d = _quipu_mp()
    return {k: float(v) for k, v in {**d["lambda"], **d["const"]}.items()}


def _mirror_lambda(L: dict) -> dict:
    out = {}
    for k, v in L.items():
        out[k] = v
        if k[1:] != "0":
            out[k[0] + "-" + k[1:]] = v
    return out


def quipu_identities(dps: int = 40) -> dict:
    """The displayed normalization identities, as ``value - 1``.

    Each is evaluated twice: from the rational function of ``t`` and from
    the PF-value expression it simplifies; the larger deviation is kept.
    """
    d = _quipu_mp(dps)
    L, c = d["lambda"], d["const"]
    t = c["t"]
    with mpmath.workdps(dps):
        pairs = {
            "x1^2+y1^2": (L["A3"] * (L["a1"] + L["a2"]) / (L["a4"] * L["A1"]),
                          c["x1"] ** 2 + c["y1"] ** 2),
            "x2^2+y2^2": ((t ** 3 - 7 * t ** 2 + 13 * t - 5) / (t ** 2 - 4 * t),
                          c["x2"] ** 2 + c["y2"] ** 2),
            "x3^2+y3^2+z3^2": ((-t ** 5 + 12 * t ** 4 - 49 * t ** 3 + 76 * t ** 2 - 33 * t + 5)
                               / (t ** 3 - 5 * t ** 2 + 4 * t),
                               c["x3"] ** 2 + c["y3"] ** 2 + c["z3"] ** 2),
            "|alpha4|^2": ((-t ** 5 + 12 * t ** 4 - 48 * t ** 3 + 73 * t ** 2 - 37 * t + 5)
                           / (2 * t ** 4 - 14 * t ** 3 + 26 * t ** 2 - 10 * t),
                           (L["A2"] * L["a1"] - L["A3"] * L["a2"]) / (L["A0"] * L["a4"])),
            "y4^2+|gamma4|^2": ((-t ** 4 + 9 * t ** 3 - 25 * t ** 2 + 24 * t - 5) / (2 * t),
                                c["y4"] ** 2 + (L["a2"] * L["A3"] + L["a3"] * L["A1"]) / (L["a2"] * L["A0"])),
            "|X' column|^2": ((t ** 4 - 9 * t ** 3 + 23 * t ** 2 - 14 * t + 5) / (-2 * t ** 2 + 8 * t),
                              (L["a2"] * L["A0"] - L["a2"] * L["A3"] - L["a3"] * L["A1"]) / (L["a0"] * L["A2"])),
            "|Y' column|^2": ((t ** 4 - 9 * t ** 3 + 25 * t ** 2 - 22 * t + 7) / 2,
                              (L["A0"] * L["a2"] - L["A1"] * L["a1"] + L["A2"] * L["a4"]) / (L["a0"] * L["A1"])),
            "x6^2+y6^2": ((t ** 4 - 11 * t ** 3 + 41 * t ** 2 - 56 * t + 17) / 2,
                          c["x6"] ** 2 + c["y6"] ** 2),
        }
        return {k: float(max(abs(a - 1), abs(b - 1), key=abs) * (1 if a >= 1 else -1))
                for k, (a, b) in pairs.items()}


def _tilde(v):
    return np.array([-v[1], v[0]])


_QUIPU_SWAPS = (
    ("A2", "a0", "rows", "a2"), ("A2", "a0", "cols", "A0"),
    ("A1", "a1", "rows", "a1"), ("A0", "a2", "cols", "A1"),
    ("A0", "a1", "rows", "a-1"), ("A0", "a1", "rows", "a1"),
    ("A0", "a1", "cols", "A1"), ("A0", "a-2", "cols", "A-1"),
    ("A0", "a-2", "cols", "A-2"), ("A0", "a-3", "cols", "A-2"),
    ("A0", "a-4", "cols", "A-2"), ("A-1", "a-1", "rows", "a-1"),
)


def _quipu_pins() -> PinSet:
    shape = quipu_shape()
    c = quipu_constants()
    P = PinSet(shape)
    x1, y1, x2, y2 = c["x1"], c["y1"], c["x2"], c["y2"]
    x3, y3, z3, x4, z4 = c["x3"], c["y3"], c["z3"], c["x4"], c["z4"]
    x5, y5, y4, x6, y6 = c["x5"], c["y5"], c["y4"], c["x6"], c["y6"]
    pm = ("", "-")

    # 1x1 sign choices
    for a in pm:
        for b in pm:
            P.one("u", f"A{a}3", f"a{b}2", 1.0)
            P.one("u", f"A{a}2", f"a{b}4", 1.0)
            P.one("u", f"A{a}2", f"a{b}3", 1.0)
            P.one("u", f"A{a}3", f"a{b}1", -1.0)
            P.one("v", f"a{a}2", f"A{b}3", 1.0)
            P.one("v", f"a{a}4", f"A{b}2", 1.0)
            P.one("v", f"a{a}3", f"A{b}2", 1.0)
            P.one("v", f"a{a}1", f"A{b}3", -1.0)
            P.one("u", f"A{a}1", f"a{b}3", 1.0)
            P.one("v", f"a{a}3", f"A{b}1", 1.0)

    # v^(a+-4, A+-1)
    P.v("a4", "A1", ["A3", "A2"], ["a2", "a1"], [[x1, -y1], [y1, x1]])
    P.v("a4", "A-1", ["A3", "A2"], ["a-1", "a-2"], [[-y1, x1], [x1, y1]])
    P.v("a-4", "A1", ["A-2", "A-3"], ["a2", "a1"], [[y1, x1], [x1, -y1]])
    P.v("a-4", "A-1", ["A-2", "A-3"], ["a-1", "a-2"], [[x1, y1], [-y1, x1]])

    # u^(A+-2, a+-2)
    P.u("A2", "a2", ["a4", "a2"], ["A2", "A1"], [[x2, y2], [-y2, x2]])
    P.u("A2", "a-2", ["a4"], ["A-1", "A-2"], [[y2, x2]])
    P.u("A-2", "a2", ["a-4"], ["A2", "A1"], [[x2, y2]])
    P.u("A-2", "a-2", ["a-4"], ["A-1", "A-2"], [[y2, x2]])

    # u^(A+-1, a+-2), v^(a+-2, A+-1)
    P.u("A1", "a2", ["a2", "a1"], ["A2", "A1"], [[x4, -z4], [z4, x4]])
    P.u("A1", "a-2", ["a2", "a1"], ["A-1", "A-2"], [[-z4, x4], [x4, z4]])
    P.u("A-1", "a2", ["a-1", "a-2"], ["A2", "A1"], [[z4, x4], [x4, -z4]])
    P.u("A-1", "a-2", ["a-1", "a-2"], ["A-1", "A-2"], [[x4, z4], [-z4, x4]])
    P.v("a2", "A1", ["A2", "A1"], ["a2", "a1"], [[x4, z4], [-z4, x4]])
    P.v("a2", "A-1", ["A2", "A1"], ["a-1", "a-2"], [[z4, x4], [x4, -z4]])
    P.v("a-2", "A1", ["A-1", "A-2"], ["a2", "a1"], [[-z4, x4], [x4, z4]])
    P.v("a-2", "A-1", ["A-1", "A-2"], ["a-1", "a-2"], [[x4, -z4], [z4, x4]])

    # 3x3 blocks u^(A+-2, a+-1), v^(a+-1, A+-2): complete the known column
    col = np.array([x3, y3, z3])
    basis = complete_orthonormal([col], 3).real
    U3 = np.column_stack([col, basis[1], basis[2]])
    al3, be3, ga3 = U3[0, 1:], U3[1, 1:], U3[2, 1:]
    top = ["a4", "a3", "a2"]
    bot = ["a-2", "a-3", "a-4"]
    P.u("A2", "a1", top, ["A1", "A0"], U3)
    P.u("A2", "a-1", top, ["A0", "A-1"],
        [list(_tilde(v)) + [k] for v, k in ((al3, x3), (be3, y3), (ga3, z3))])
    P.u("A-2", "a1", bot, ["A1", "A0"],
        [[k] + list(v) for v, k in ((ga3, z3), (be3, y3), (al3, x3))])
    P.u("A-2", "a-1", bot, ["A0", "A-1"],
        [list(_tilde(v)) + [k] for v, k in ((ga3, z3), (be3, y3), (al3, x3))])
    rows3 = np.array([al3, be3, ga3]).T            # 2 x 3: columns a4, a3, a2
    rows3t = np.array([_tilde(al3), _tilde(be3), _tilde(ga3)]).T
    P.v("a1", "A2", ["A1", "A0"], top, np.vstack([[x3, y3, z3], rows3]))
    P.v("a1", "A-2", ["A1", "A0"], bot, np.vstack([[z3, y3, x3], rows3[:, ::-1]]))
    P.v("a-1", "A2", ["A0", "A-1"], top, np.vstack([rows3t, [x3, y3, z3]]))
    P.v("a-1", "A-2", ["A0", "A-1"], bot, np.vstack([rows3t[:, ::-1], [z3, y3, x3]]))

    # u^(A0, a+-4), u^(A0, a+-3) and their v partners
    al4 = c["f_alpha4"] * al3
    be4 = c["f_beta4"] * be3
    for a in pm:
        for leaf, vec in ((f"a{a}4", al4), (f"a{a}3", be4)):
            cnt = f"A{a}2"
            P.u("A0", leaf, ["a1", "a-1"], [cnt], [list(vec), list(_tilde(vec))])
            P.v(leaf, "A0", [cnt], ["a1", "a-1"], np.column_stack([vec, _tilde(vec)]))

    # u^(A+-1, a+-1), v^(a+-1, A+-1)
    B = [[x5, y5, 0], [y5, -x5, 0], [0, 0, 1]]
    P.u("A1", "a1", ["a2", "a1"], ["A1", "A0"], B)
    P.u("A1", "a-1", ["a2", "a1"], ["A0", "A-1"], [[0, y5, x5], [0, -x5, y5], [1, 0, 0]])
    P.u("A-1", "a1", ["a-1", "a-2"], ["A1", "A0"], [[0, 0, 1], [y5, -x5, 0], [x5, y5, 0]])
    P.u("A-1", "a-1", ["a-1", "a-2"], ["A0", "A-1"], [[1, 0, 0], [0, -x5, y5], [0, y5, x5]])
    # the v partners follow by bi-duality; the displayed v tables number the
    # two parallel a1 -> a-1 edges in the opposite order

    # 4x4 blocks u^(A0, a+-2): complete the first and last rows
    ga4 = c["f_gamma4"] * ga3
    r1 = np.concatenate([ga4, [y4, 0]])
    r4 = np.concatenate([_tilde(ga4), [0, y4]])
    M = complete_orthonormal([r1, r4], 4).real[2:]
    X, Y = M[:, :2], M[:, 2:]
    P.u("A0", "a2", ["a1", "a0", "a-1"], ["A2", "A1"], np.vstack([r1, M, r4]))
    P.u("A0", "a-2", ["a1", "a0", "a-1"], ["A-1", "A-2"],
        np.vstack([np.concatenate([[y4, 0], ga4]), np.hstack([Y, X]),
                   np.concatenate([[0, y4], _tilde(ga4)])]))
    for a in pm:
        P.v(f"a{a}2", "A0", [f"A{a}2"], ["a1", "a0", "a-1"],
            np.column_stack([ga4, X.T, _tilde(ga4)]))
        P.v(f"a{a}2", "A0", [f"A{a}1"], ["a1", "a0", "a-1"],
            np.column_stack([[y4, 0], Y.T, [0, y4]]))
        Xp, Yp = c["f_X"] * X, c["f_Y"] * Y
        P.u(f"A{a}2", "a0", [f"a{a}2"], ["A0"], Xp)
        P.u(f"A{a}1", "a0", [f"a{a}2"], ["A0"], Yp)
        P.v("a0", f"A{a}2", ["A0"], [f"a{a}2"], Xp.T)
        P.v("a0", f"A{a}1", ["A0"], [f"a{a}2"], Yp.T)

    # 4x4 blocks u^(A0, a+-1): complete the first two columns
    c1 = np.array([-x6, 0, 0, y6])
    c2 = np.array([0, y6, -x6, 0])
    Q = complete_orthonormal([c1, c2], 4).real
    U4 = np.column_stack([c1, c2, Q[2], Q[3]])
    Z, W = U4[:2, 2:], U4[2:, 2:]
    P.u("A0", "a1", ["a1", "a-1"], ["A1", "A0"], U4)
    P.u("A0", "a-1", ["a1", "a-1"], ["A0", "A-1"],
        np.vstack([np.hstack([W, [[0, -x6], [y6, 0]]]), np.hstack([Z, [[-x6, 0], [0, y6]]])]))
    P.v("a1", "A0", ["A1", "A0"], ["a1", "a-1"],
        np.vstack([[[-x6, 0, 0, y6], [0, y6, -x6, 0]], np.hstack([Z.T, W.T])]))
    P.v("a-1", "A0", ["A0", "A-1"], ["a1", "a-1"],
        np.vstack([np.hstack([W.T, Z.T]), [[0, y6, -x6, 0], [-x6, 0, 0, y6]]]))
    # the tables number parallel edges cell by cell; these exchanges make
    # the numbering global so that the u blocks agree under bi-duality
    for a, b, axis, label in _QUIPU_SWAPS:
        P.swap("u", a, b, axis, label)
    return P


@lru_cache(maxsize=None)
def _quipu() -> CatalogEntry:
    shape = quipu_shape()
    lam = _mirror_lambda({k: float(v) for k, v in _quipu_mp()["lambda"].items()})
    return _finish("quipu", shape, lam, _quipu_pins(), quipu_identities(),
                   drop_conflicting_v=True)


def quipu_connection() -> CatalogEntry:
    return _quipu()


def catalog_entry(name: str, **kwargs) -> CatalogEntry:
    builders = {
        "small_broom": small_broom_connection,
        "medium_broom": medium_broom_connection,
        "large_broom": large_broom_connection,
        "quipu": quipu_connection,
    }
    try:
        return builders[name](**kwargs)
    except KeyError:
        raise KeyError(f"unknown catalog connection {name!r}; choose from {CATALOG_NAMES}") from None


def catalog_json(name: str, **kwargs) -> dict:
    """Connection JSON for a catalog entry, with its identity residuals and solver metadata."""
    entry = catalog_entry(name, **kwargs)
    out = connection_to_json(entry.connection, name)
    out["identities"] = {k: repr(float(abs(v))) for k, v in entry.identities.items()}
    meta = entry.connection.meta
    out["solver"] = {k: meta[k] for k in ("field", "solver_residual", "free_entries") if k in meta}
    if "solver_residual" in out["solver"]:
        out["solver"]["solver_residual"] = repr(float(out["solver"]["solver_residual"]))
    return out
