"""Bipartite inclusion graphs and their Perron-Frobenius data."""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np
from scipy.sparse.csgraph import connected_components

__all__ = [
    "BipartiteGraph",
    "SpectralData",
    "GraphError",
    "from_adjacency",
    "make_star",
    "spectral",
    "spectral_mp",
    "dimension_weights",
    "wenzl_bound",
    "graph_to_json",
    "graph_from_json",
    "graph_to_dot",
]


class GraphError(ValueError):
    """Raised for malformed or disconnected graph input."""


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite multigraph; ``adjacency[i, j]`` counts edges left[i] -- right[j]."""

    left_labels: tuple
    right_labels: tuple
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=np.int64)
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "left_labels", tuple(self.left_labels))
        object.__setattr__(self, "right_labels", tuple(self.right_labels))

    @property
    def shape(self):
        return self.adjacency.shape

    def left_index(self, label) -> int:
        return self.left_labels.index(label)

    def right_index(self, label) -> int:
        return self.right_labels.index(label)

    def transpose(self) -> "BipartiteGraph":
        return BipartiteGraph(self.right_labels, self.left_labels, self.adjacency.T)

    def components(self) -> list[list]:
        """Connected components as lists of labels (left labels first)."""
        m, n = self.shape
        block = np.zeros((m + n, m + n), dtype=np.int64)
        block[:m, m:] = self.adjacency
        block[m:, :m] = self.adjacency.T
        ncomp, lab = connected_components(block, directed=False)
        names = list(self.left_labels) + list(self.right_labels)
        return [[names[k] for k in range(m + n) if lab[k] == c] for c in range(ncomp)]

    def is_connected(self) -> bool:
        return len(self.components()) == 1


@dataclass(frozen=True)
class SpectralData:
    """Norm and symmetric PF pair: ``A @ pf_right = norm * pf_left``."""

    norm: float
    pf_left: np.ndarray
    pf_right: np.ndarray
    residual: float

    @property
    def norm_sq(self) -> float:
        return self.norm ** 2


def from_adjacency(left_labels: Sequence, right_labels: Sequence, matrix) -> BipartiteGraph:
    mat = np.asarray(matrix)
    if mat.ndim != 2 or mat.shape != (len(left_labels), len(right_labels)):
        raise GraphError(
            f"adjacency shape {mat.shape} does not match label counts "
            f"({len(left_labels)}, {len(right_labels)})"
        )
    if mat.size and not np.all(np.equal(np.mod(mat, 1), 0)):
        raise GraphError("adjacency entries must be integers")
    mat = mat.astype(np.int64)
    if np.any(mat < 0):
        raise GraphError("adjacency entries must be nonnegative")
    if not np.any(mat):
        raise GraphError("adjacency matrix is all zero")
    for side, labels in (("left", left_labels), ("right", right_labels)):
        if len(set(labels)) != len(labels):
            raise GraphError(f"duplicate {side} labels")
    zero_rows = [left_labels[i] for i in np.flatnonzero(~mat.any(axis=1))]
    zero_cols = [right_labels[j] for j in np.flatnonzero(~mat.any(axis=0))]
    if zero_rows or zero_cols:
        raise GraphError(f"isolated vertices: {zero_rows + zero_cols}")
    return BipartiteGraph(left_labels, right_labels, mat)


def _arm_name(k: int) -> str:
    letters = string.ascii_lowercase
    return letters[k] if k < len(letters) else f"x{k}_"


def make_star(arm_lengths: Sequence[int]) -> BipartiteGraph:
    """Star S(k_1, ..., k_m): center ``A``, arm ``k`` has vertices ``<letter>1 .. <letter>k_i``.

    The center sits on the left side; odd-distance vertices are on the right.
    """
    arm_lengths = list(arm_lengths)
    if not arm_lengths:
        raise GraphError("a star needs at least one arm")
    if any(int(k) < 1 for k in arm_lengths):
        raise GraphError("arm lengths must be positive")
    left, right, edges = ["A"], [], []
    for a, length in enumerate(arm_lengths):
        prev = "A"
        for d in range(1, int(length) + 1):
            name = f"{_arm_name(a)}{d}"
            (right if d % 2 else left).append(name)
            edges.append((prev, name) if d % 2 else (name, prev))
            prev = name
    mat = np.zeros((len(left), len(right)), dtype=np.int64)
    li = {v: i for i, v in enumerate(left)}
    ri = {v: i for i, v in enumerate(right)}
    for lv, rv in edges:
        mat[li[lv], ri[rv]] += 1
    return from_adjacency(left, right, mat)


def _block(adj: np.ndarray) -> np.ndarray:
    m, n = adj.shape
    out = np.zeros((m + n, m + n))
    out[:m, m:] = adj
    out[m:, :m] = adj.T
    return out


def _require_connected(graph: BipartiteGraph):
    comps = graph.components()
    if len(comps) != 1:
        raise GraphError(f"graph is disconnected; components: {comps}")


def spectral(graph: BipartiteGraph, tolerance: float = 1e-12, anchor: float = 1.0) -> SpectralData:
    """PF data from a symmetric eigensolve of the bipartite block matrix.

    Both halves share one scale, fixed so that ``max(pf_left) == anchor``.
    """
    _require_connected(graph)
    adj = graph.adjacency.astype(float)
    m = adj.shape[0]
    evals, evecs = np.linalg.eigh(_block(adj))
    vec = evecs[:, -1]
    vec = vec * np.sign(vec[np.argmax(np.abs(vec))])
    norm = float(evals[-1])
    left, right = vec[:m], vec[m:]
    scale = anchor / left.max()
    left, right = left * scale, right * scale
    if np.any(left <= 0) or np.any(right <= 0):
        raise GraphError("PF vector not strictly positive")
    res = max(
        np.max(np.abs(adj @ right - norm * left)),
        np.max(np.abs(adj.T @ left - norm * right)),
    )
    if res > tolerance * max(1.0, abs(anchor)) * max(1.0, norm):
        raise GraphError(f"PF solve did not reach tolerance (residual {res:.3e})")
    return SpectralData(norm, left, right, float(res))


def spectral_mp(graph: BipartiteGraph, dps: int = 40):
    """High-precision PF data ``(norm, pf_left, pf_right)`` as mpmath values.

    Starts from the double-precision solution and runs Rayleigh quotient
    iteration at ``dps`` digits; normalization matches :func:`spectral`.
    """
    sd = spectral(graph)
    m, n = graph.shape
    with mpmath.workdps(dps + 10):
        B = mpmath.matrix(_block(graph.adjacency.astype(int)).tolist())
        x = mpmath.matrix(np.concatenate([sd.pf_left, sd.pf_right]).tolist())
        x = x / mpmath.norm(x)
        sigma = mpmath.mpf(sd.norm)
        for _ in range(6):
            shifted = B - (sigma + mpmath.mpf(10) ** (-(dps + 5))) * mpmath.eye(m + n)
            y = mpmath.lu_solve(shifted, x)
            x = y / mpmath.norm(y)
            if x[0] < 0:
                x = -x
            sigma = (x.T * B * x)[0]
        left = [x[i] for i in range(m)]
        right = [x[m + j] for j in range(n)]
        scale = 1 / max(left)
        left = [v * scale for v in left]
        right = [v * scale for v in right]
        return +sigma, left, right


def dimension_weights(
    graph: BipartiteGraph,
    sum_side: str = "left",
    anchor_label=None,
    anchor_value: float = 1.0,
) -> dict:
    """Trace-type weights: each vertex on ``sum_side`` equals the sum over its neighbours.

    With ``sum_side="left"`` the left weights are ``A @ right``; with ``"right"``
    the right weights are ``A.T @ left``. The result is scaled so that
    ``anchor_label`` (default: first left label) carries ``anchor_value``.
    """
    sd = spectral(graph)
    if sum_side == "left":
        left, right = sd.norm * sd.pf_left, sd.pf_right
    elif sum_side == "right":
        left, right = sd.pf_left, sd.norm * sd.pf_right
    else:
        raise ValueError("sum_side must be 'left' or 'right'")
    out = dict(zip(graph.left_labels, left))
    out.update(zip(graph.right_labels, right))
    label = graph.left_labels[0] if anchor_label is None else anchor_label
    scale = anchor_value / out[label]
    return {k: v * scale for k, v in out.items()}


def wenzl_bound(G, L, use_columns: bool = False) -> int:
    """Square of the smallest row (or column) 1-norm among ``G`` and ``L``."""
    G = np.asarray(G, dtype=np.int64)
    L = np.asarray(L, dtype=np.int64)
    axis = 0 if use_columns else 1
    smallest = min(np.abs(G).sum(axis=axis).min(), np.abs(L).sum(axis=axis).min())
    return int(smallest) ** 2


def graph_to_json(graph: BipartiteGraph) -> dict:
    return {
        "left": list(graph.left_labels),
        "right": list(graph.right_labels),
        "adj": graph.adjacency.tolist(),
    }


def graph_from_json(obj) -> BipartiteGraph:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        return from_adjacency(obj["left"], obj["right"], obj["adj"])
    except KeyError as exc:
        raise GraphError(f"graph JSON missing key {exc}") from None


def graph_to_dot(graph: BipartiteGraph, name: str = "G") -> str:
    lines = [f"graph {name} {{", "  rankdir=TB;"]
    lines.append("  { rank=same; " + " ".join(f'"L:{v}"' for v in graph.left_labels) + " }")
    lines.append("  { rank=same; " + " ".join(f'"R:{v}"' for v in graph.right_labels) + " }")
    for v in graph.left_labels:
        lines.append(f'  "L:{v}" [label="{v}", bipartite=0];')
    for v in graph.right_labels:
        lines.append(f'  "R:{v}" [label="{v}", bipartite=1];')
    for i, a in enumerate(graph.left_labels):
        for j, b in enumerate(graph.right_labels):
            for _ in range(int(graph.adjacency[i, j])):
                lines.append(f'  "L:{a}" -- "R:{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
