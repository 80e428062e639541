import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commsq.factorization import (
    FactorizationError,
    brute_force_factorizations,
    candidate_pairs,
    count_factorizations,
    enumerate_factorizations,
    operator_norm_sq,
    screen_intermediate,
)
from commsq.graphs import make_star

STAR3333 = make_star([3, 3, 3, 3]).adjacency


def test_trivial():
    facs = enumerate_factorizations([[1]])
    assert len(facs) == 1
    assert facs[0].H.tolist() == [[1]] and facs[0].K.tolist() == [[1]]


def test_two_by_hand():
    # [[2]] = 1*2 = 2*1 = [1 1][1 1]^t
    keys = {f.key() for f in enumerate_factorizations([[2]])}
    assert keys == {(((1,), (2,)),), (((2,), (1,)),), (((1,), (1,)), ((1,), (1,)))}
    assert keys == brute_force_factorizations([[2]])
    assert count_factorizations([[2]]).labeled == 3


@pytest.mark.parametrize("G, n", [([[1, 1], [1, 1]], 8), ([[2, 1], [0, 3]], 40)])
def test_small_counts_match_oracle(G, n):
    facs = enumerate_factorizations(G)
    assert len(facs) == n
    assert {f.key() for f in facs} == brute_force_factorizations(G)


@pytest.mark.parametrize("arms, n", [([3, 3], 13), ([2, 2, 2], 15), ([1, 2, 3], 17)])
def test_star_counts_match_oracle(arms, n):
    G = make_star(arms).adjacency
    assert len(enumerate_factorizations(G)) == n
    assert {f.key() for f in enumerate_factorizations(G)} == brute_force_factorizations(G)


@pytest.mark.parametrize("G", [[[0, 1], [0, 1]], [[1, 0], [0, 0]], [[-1]], [[0.5]], []])
def test_rejects_bad_input(G):
    with pytest.raises(FactorizationError):
        enumerate_factorizations(G)


def test_star3333_counts():
    facs = enumerate_factorizations(STAR3333)
    counts = count_factorizations(STAR3333)
    assert counts.canonical == len(facs) == 457
    assert counts.labeled == 1_339_108_680
    assert {f.key() for f in facs} == {f.key() for f in enumerate_factorizations(STAR3333)}


def test_star3333_norms_present():
    vals = sorted({round(operator_norm_sq(f.H), 3) for f in enumerate_factorizations(STAR3333)})
    assert vals == [1, 2, 3, 3.618, 4, 4.414, 4.732, 5, 5.236]


def test_screen_examples():
    assert screen_intermediate(STAR3333, (3 + math.sqrt(5)) / 2, 1e-9) == []
    hits = screen_intermediate(STAR3333, 3 + math.sqrt(5), 1e-9)
    # the identity factorization, up to the middle-index ordering
    def is_permutation(K):
        return K.shape[0] == K.shape[1] and (K.sum(axis=0) == 1).all() and (K.sum(axis=1) == 1).all()
    assert any(is_permutation(f.K) for f in hits)
    assert len(screen_intermediate([[1]], 1, 1e-9)) == 1


def test_canonical_order():
    facs = enumerate_factorizations([[2, 1], [1, 1]])
    keys = [f.key() for f in facs]
    assert keys == sorted(keys)
    for f in facs:
        assert list(f.pairs()) == sorted(f.pairs())


def test_candidate_pairs_bounded():
    G = np.array([[2, 1], [0, 3]])
    for h, k in candidate_pairs(G):
        assert np.all(np.outer(h, k) <= G)


@pytest.mark.slow
def test_star3333_oracle():
    assert {f.key() for f in enumerate_factorizations(STAR3333)} == brute_force_factorizations(STAR3333)


small_G = st.integers(1, 3).flatmap(lambda m: st.integers(1, 3).flatmap(
    lambda n: st.lists(st.integers(0, 2), min_size=m * n, max_size=m * n).map(
        lambda xs: np.array(xs).reshape(m, n))))


@settings(max_examples=60, derandomize=True, deadline=None, database=None)
@given(small_G)
def test_factorization_invariants(G):
    if not (G.any(axis=0).all() and G.any(axis=1).all()):
        with pytest.raises(FactorizationError):
            enumerate_factorizations(G)
        return
    facs = enumerate_factorizations(G)
    for f in facs:
        assert np.array_equal(f.H @ f.K, G)
        assert f.H.any(axis=0).all() and f.H.any(axis=1).all()
        assert f.K.any(axis=0).all() and f.K.any(axis=1).all()
        assert f.q <= G.sum() and f.H.max() <= G.sum() and f.K.max() <= G.sum()
    transposed = {tuple(sorted((k, h) for h, k in f.pairs())) for f in facs}
    assert transposed == {f.key() for f in enumerate_factorizations(G.T)}
