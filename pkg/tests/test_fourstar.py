import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq, minimize_scalar

from commsq.connection import check_nondegenerate, verify
from commsq.fourstar import (
    FamilyError,
    FourStarConstants,
    family_connection,
    family_distinct,
    family_point,
    fourstar_constants,
    fourstar_graph,
    fourstar_shape,
    index_table,
    t_of_s,
)
from commsq.graphs import spectral

PAIRS = [(i, j) for i in range(1, 5) for j in range(1, 5)]


@pytest.mark.parametrize("i, j", [(i, j) for i in range(1, 7) for j in range(1, 7)])
def test_normalization(i, j):
    c = fourstar_constants(i, j)
    assert max(c.normalization_residuals()) <= 1e-12
    lam = c.lam
    assert c.alpha2 == pytest.approx(math.sqrt(lam["a1"] * lam["b1"]) / lam["A"], abs=1e-15)
    assert c.alpha3 == pytest.approx(lam["a1"] / lam["A"], abs=1e-15)
    assert c.beta == pytest.approx(lam["b1"] / lam["A"], abs=1e-15)


def test_symmetric_in_i_j():
    a, b = fourstar_constants(1, 3), fourstar_constants(3, 1)
    assert (a.alpha1, a.alpha2, a.alpha3, a.beta, a.xi) == (b.alpha1, b.alpha2, b.alpha3, b.beta, b.xi)
    # the longer arms carry the larger first-vertex weight
    assert a.alpha3 >= a.beta


def test_constants_examples():
    c = fourstar_constants(1, 1)
    assert c.norm_sq == pytest.approx(4, abs=1e-12)
    assert c.alpha2 == pytest.approx(c.alpha3) and c.beta == pytest.approx(c.alpha3)
    assert fourstar_constants(3, 3).norm_sq == pytest.approx(3 + math.sqrt(5), abs=1e-12)
    assert fourstar_constants(1, 2).norm_sq == pytest.approx((5 + math.sqrt(17)) / 2, abs=1e-12)
    with pytest.raises(FamilyError):
        fourstar_graph(0, 2)


def test_t_of_s_trivial_branch():
    # beta^2 - xi^2 + alpha1^2 cos s = alpha3^2 gives arccos(1) = 0
    c = FourStarConstants(1, 1, alpha1=0.0, alpha2=0.5, alpha3=0.5, beta=0.6, xi=math.sqrt(0.11), lam={})
    assert t_of_s(c, 1.3) == pytest.approx(0.65, abs=1e-15)


def _z1(c, s, t):
    w, z3 = np.exp(1j * s), np.exp(1j * t)
    return -(c.alpha1 * (1 + w) + c.alpha3 * (z3 - w * np.conj(z3))) / (2 * c.xi)


def test_t_of_s_scan_oracle():
    c = fourstar_constants(1, 1)
    # s = 0.7: |z1(t)| - 1 changes sign at the principal root
    f = lambda t: abs(_z1(c, 0.7, t)) - 1
    grid = np.linspace(0.35 - math.pi / 2, 0.35, 2001)
    vals = [f(t) for t in grid]
    roots = [brentq(f, a, b, xtol=1e-15) for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]) if fa * fb < 0]
    assert roots
    assert min(abs(r - t_of_s(c, 0.7)) for r in roots) <= 1e-10
    # s = 0: the root is a tangency (|z1| >= 1 nearby), so locate it by minimizing
    g = lambda t: abs(_z1(c, 0.0, t)) - 1
    res = minimize_scalar(g, bounds=(-math.pi / 2, math.pi / 2), method="bounded", options={"xatol": 1e-12})
    assert abs(res.fun) <= 1e-10
    assert res.x == pytest.approx(t_of_s(c, 0.0), abs=1e-5)


def test_unit_moduli_2_2():
    c = fourstar_constants(2, 2)
    p = family_point(c, math.pi / 3)
    assert abs(abs(p.z1) - 1) <= 1e-12 and abs(abs(p.z2) - 1) <= 1e-12
    assert abs(abs(p.z3) - 1) <= 1e-12 and abs(abs(p.w) - 1) <= 1e-12


@pytest.mark.parametrize("i, j", PAIRS)
def test_family_point_structure(i, j):
    c = fourstar_constants(i, j)
    for s in np.linspace(0, 2 * np.pi, 16, endpoint=False):
        p = family_point(c, float(s))
        assert p.unitarity_residual() <= 1e-12
        assert np.allclose(p.block[0], [c.alpha1, c.alpha2, c.alpha2, c.alpha3], atol=1e-15)
        # rows 2 and 3 are orthogonal by the choice of x
        assert abs(np.vdot(p.block[2], p.block[1])) <= 1e-12
        assert np.allclose(np.abs(p.block[3]), [c.alpha3, c.alpha2, c.alpha2, c.alpha1], atol=1e-12)
        assert p.block[3, 0] == pytest.approx(c.alpha3, abs=1e-12)
        # the condition for |z1| = |z2| = 1
        rhs = c.xi ** 2 - c.alpha1 ** 2 * math.cos(s) + c.alpha3 ** 2 * math.cos(s - 2 * p.t)
        assert c.beta ** 2 == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("s", [0.0, 1.0, 2.0, 3.0])
def test_connection_1_1(s):
    assert verify(family_connection(1, 1, s), 1e-10).passed


def test_connection_shapes():
    assert check_nondegenerate(fourstar_shape(3, 3))
    assert spectral(fourstar_graph(3, 3)).norm_sq == pytest.approx(3 + math.sqrt(5), abs=1e-12)
    conn = family_connection(1, 2, 0.0)
    assert verify(conn, 1e-10).passed
    assert spectral(conn.shape.graph("G")).norm_sq == pytest.approx((5 + math.sqrt(17)) / 2, abs=1e-12)


def test_distinct_examples():
    assert not family_distinct(1, 1, 0.4, 0.4)
    assert family_distinct(1, 1, 0.0, 0.5)
    assert not family_distinct(2, 2, 0.0, 1e-14, tol=1e-10)


def test_index_table():
    tab = index_table(4, 4, limits=True)
    assert tab[(4, 4)] == pytest.approx((7 + math.sqrt(13)) / 2, abs=1e-9)
    assert tab[(2, 3)] == pytest.approx(5.1249, abs=5e-5)
    assert tab[(math.inf, math.inf)] == pytest.approx(16 / 3, abs=1e-3)
    assert max(tab["_truncation"].values()) <= 1e-6
    # lower triangular: no (i, j) with i > j
    assert all(k[0] <= k[1] for k in tab if k != "_truncation")


@settings(max_examples=60, derandomize=True, deadline=None, database=None)
@given(st.sampled_from(PAIRS), st.floats(-10, 10, allow_nan=False))
def test_family_unitary_everywhere(ij, s):
    p = family_point(fourstar_constants(*ij), s)
    assert p.unitarity_residual() <= 1e-12
