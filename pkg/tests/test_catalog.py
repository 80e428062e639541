import json
import math

import numpy as np
import pytest

from commsq import catalog
from commsq.connection import check_nondegenerate, connection_from_json, verify
from commsq.graphs import dimension_weights

R17 = math.sqrt(17)


@pytest.mark.parametrize("name", catalog.CATALOG_NAMES)
def test_entry_invariants(name):
    e = catalog.catalog_entry(name)
    assert check_nondegenerate(e.shape)
    assert verify(e.connection, 1e-10).passed
    assert e.max_identity_residual() <= 1e-9


def test_unknown_name():
    with pytest.raises(KeyError, match="unknown catalog"):
        catalog.catalog_entry("huge_broom")


def test_small_broom_data():
    s = catalog.small_broom_shape()
    assert s.H[0, 0] == 3
    assert (s.G @ s.K)[0].tolist() == [3, 3, 3, 4, 1, 1, 1]
    c = catalog.small_broom_connection().connection
    blk = c.u_blocks[("A", "a0")]
    h = 1 / math.sqrt(2)
    # rows (a3, a2, a0, a0'), columns (A, A', A'', B)
    assert blk[0, 2] == pytest.approx(h) and blk[1, 2] == pytest.approx(-h)
    assert blk[2, 0] == pytest.approx(1) and blk[3, 1] == pytest.approx(1)
    assert all(np.allclose(b, 1) for b in c.u_blocks.values() if b.shape == (1, 1))


def test_small_broom_weights_from_pf():
    w = dimension_weights(catalog.small_broom_shape().graph("G"), "left", anchor_label="a3")
    lam = catalog._small_lambda()
    assert all(w[k] == pytest.approx(v, abs=1e-12) for k, v in lam.items())


def test_medium_broom_data():
    r3 = math.sqrt(3)
    lam = catalog._medium_lambda()
    assert (lam["A1"], lam["A0"], lam["B1"]) == pytest.approx((3 + r3, 2 * r3, 3 + r3))
    w = dimension_weights(catalog.medium_broom_shape().graph("G"), "left", anchor_label="a3")
    assert all(w[k] == pytest.approx(v, abs=1e-12) for k, v in lam.items())
    blk = catalog.medium_broom_connection().connection.u_blocks[("A1", "a0")]
    # column A0 is (x3, x2, x0)
    assert blk[2, 2].real == pytest.approx(math.sqrt((-3 + 2 * r3) / 3), abs=1e-12)
    ids = catalog.medium_broom_connection().identities
    assert abs(ids["a: <alpha3,alpha2> + (3-sqrt3)/3"]) <= 1e-12


def test_large_broom_constants():
    t0 = catalog.large_broom_t0()
    assert t0 == pytest.approx(2 * math.pi - math.atan(math.sqrt((-1 + R17) / 2)), abs=1e-15)
    assert t0 == pytest.approx(5.3873, abs=1e-4)
    # sqrt(-1 + sqrt17) / 2 inside the arctan would give 5.5595, off the root of <g2, xi3>(0, t)
    assert abs(2 * math.pi - math.atan(math.sqrt(-1 + R17) / 2) - 5.3873) > 0.1
    v = catalog._large_vectors(0.0, t0)
    a1 = v["alpha"]["a1"]
    assert a1 @ a1 == pytest.approx((-3 + R17) / 2, abs=1e-12)
    kappa = math.sqrt((7 - R17) / (1 + R17))
    for leaf in ("a1", "a2", "a3"):
        assert np.allclose(v["xi"][leaf][:2], -kappa * v["alpha"][leaf], atol=1e-15)
    assert v["x3"][2] == pytest.approx(-math.sqrt(-4 + R17), abs=1e-15)
    ids = catalog.large_broom_identities(0.0)
    assert max(abs(ids[k]) for k in ("F1", "F2", "F3")) <= 1e-9
    assert abs(ids["<g2,xi3>"]) <= 1e-12


def test_large_broom_off_line():
    ids = catalog.large_broom_identities(0.0, catalog.large_broom_t0() + 0.2)
    assert max(abs(v) for k, v in ids.items() if k.startswith("F")) > 1e-3


@pytest.mark.parametrize("s", [0.3, -0.5, 2.5])
def test_large_broom_on_line_verifies(s):
    e = catalog.large_broom_connection(s)
    assert verify(e.connection, 1e-10).passed
    assert e.max_identity_residual() <= 1e-8


def test_quipu_constants():
    q = catalog.quipu_constants()
    t = q["t"]
    assert t ** 3 - 8 * t ** 2 + 17 * t - 5 == pytest.approx(0, abs=1e-12)
    assert q["a1"] == pytest.approx((t - 1) / 2, abs=1e-14)
    assert (t ** 3 - 7 * t ** 2 + 13 * t - 5) / (t ** 2 - 4 * t) == pytest.approx(1, abs=1e-12)
    assert (t ** 4 - 11 * t ** 3 + 41 * t ** 2 - 56 * t + 17) / 2 == pytest.approx(1, abs=1e-12)
    assert q["x2"] ** 2 + q["y2"] ** 2 == pytest.approx(1, abs=1e-12)
    ids = catalog.quipu_identities()
    assert max(abs(v) for v in ids.values()) <= 1e-10


@pytest.mark.parametrize("name", catalog.CATALOG_NAMES)
def test_export_roundtrip(name):
    obj = json.loads(json.dumps(catalog.catalog_json(name)))
    assert obj["name"] == name and "identities" in obj and "solver" in obj
    assert verify(connection_from_json(obj), 1e-10).passed
