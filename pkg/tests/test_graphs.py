import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commsq import catalog
from commsq.graphs import (
    GraphError,
    dimension_weights,
    from_adjacency,
    graph_from_json,
    graph_to_dot,
    graph_to_json,
    make_star,
    spectral,
    spectral_mp,
    wenzl_bound,
)

from helpers import connected_bipartite

SMALL_BROOM_G = [[1, 1, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 1, 1]]


def test_single_edge():
    g = from_adjacency(["A"], ["a"], [[1]])
    sd = spectral(g)
    assert g.shape == (1, 1)
    assert sd.norm == pytest.approx(1.0, abs=1e-14)
    assert sd.pf_left.tolist() == [1.0] and sd.pf_right == pytest.approx([1.0])


def test_small_broom_norm_and_weights():
    g = from_adjacency(["A", "B"], ["a3", "a2", "a1", "a0", "b1", "b2", "b3"], SMALL_BROOM_G)
    assert spectral(g).norm_sq == pytest.approx(5.0, abs=1e-12)
    w = dimension_weights(g, "left", anchor_label="a3")
    assert w["A"] == pytest.approx(5) and w["B"] == pytest.approx(5) and w["a0"] == pytest.approx(2)
    assert all(w[x] == pytest.approx(1) for x in ("a3", "a2", "a1", "b1", "b2", "b3"))


@pytest.mark.parametrize("labels, mat, msg", [
    (["A", "B"], [[1, 0], [1, 0]], "isolated"),
    (["A"], [[1, -1]], "negative"),
    (["A"], [[1, 1], [1, 1]], "shape"),
    (["A"], [[0, 0]], "all zero"),
    (["A"], [[0.5, 1]], "integers"),
])
def test_from_adjacency_errors(labels, mat, msg):
    right = [f"r{j}" for j in range(np.shape(mat)[1])]
    with pytest.raises(GraphError, match=msg):
        from_adjacency(labels, right, mat)


def test_duplicate_labels_rejected():
    with pytest.raises(GraphError, match="duplicate"):
        from_adjacency(["A", "A"], ["a"], [[1], [1]])


def test_star_examples():
    assert spectral(make_star([1, 1, 1, 1])).norm_sq == pytest.approx(4, abs=1e-12)
    assert spectral(make_star([3, 3, 3, 3])).norm_sq == pytest.approx(3 + math.sqrt(5), abs=1e-12)
    assert spectral(make_star([1])).norm == pytest.approx(1, abs=1e-14)
    with pytest.raises(GraphError):
        make_star([])
    with pytest.raises(GraphError):
        make_star([2, 0])


def test_star_vertex_order():
    g = make_star([2, 1, 3])
    assert g.left_labels == ("A", "a2", "c2")
    assert g.right_labels == ("a1", "b1", "c1", "c3")
    # center has valency equal to the number of arms
    assert g.adjacency[0].sum() == 3
    assert g.is_connected()


def test_quipu_norm():
    root = max(r.real for r in np.roots([1, -8, 17, -5]) if abs(r.imag) < 1e-12)
    assert spectral(catalog.quipu_shape().graph("G")).norm_sq == pytest.approx(root, abs=1e-12)
    assert root == pytest.approx(4.37720, abs=1e-5)


def test_disconnected_reports_components():
    g = from_adjacency(["A", "B"], ["a", "b"], [[1, 0], [0, 1]])
    with pytest.raises(GraphError, match="components"):
        spectral(g)


def test_anchor_override():
    g = make_star([1, 2])
    sd = spectral(g, anchor=3.0)
    assert sd.pf_left.max() == pytest.approx(3.0)


def test_spectral_mp_agrees():
    g = catalog.quipu_shape().graph("G")
    norm, left, right = spectral_mp(g, dps=40)
    sd = spectral(g)
    assert float(norm) == pytest.approx(sd.norm, abs=1e-13)
    assert np.allclose([float(x) for x in left], sd.pf_left, atol=1e-13)


def test_wenzl_examples():
    G = np.array(SMALL_BROOM_G)
    assert wenzl_bound(G, G, use_columns=True) == 1
    assert wenzl_bound(G, G) == 16
    assert wenzl_bound([[2]], [[2]]) == 4
    qs = catalog.quipu_shape()
    assert wenzl_bound(qs.G, qs.L) == 1


def test_json_and_dot_roundtrip():
    g = make_star([2, 2])
    back = graph_from_json(graph_to_json(g))
    assert back.left_labels == g.left_labels and np.array_equal(back.adjacency, g.adjacency)
    dot = graph_to_dot(g)
    assert dot.startswith("graph") and '"L:A" -- "R:a1"' in dot


@settings(max_examples=40, derandomize=True, deadline=None, database=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=5), st.randoms(use_true_random=False))
def test_star_norm_permutation_invariant(arms, rnd):
    perm = list(arms)
    rnd.shuffle(perm)
    assert spectral(make_star(arms)).norm == pytest.approx(spectral(make_star(perm)).norm, abs=1e-12)


@settings(max_examples=40, derandomize=True, deadline=None, database=None)
@given(connected_bipartite())
def test_transpose_spectral(g):
    a, b = spectral(g), spectral(g.transpose())
    assert a.norm == pytest.approx(b.norm, abs=1e-12)
    assert np.allclose(b.pf_left / b.pf_left.max(), a.pf_right / a.pf_right.max(), atol=1e-10)
