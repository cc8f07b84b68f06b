import pytest

from crossedhom.errors import UnsupportedModel
from crossedhom.spectral import INFINITY, desk_model, symbol_trace_count
from crossedhom.algebras import symbol_model


@pytest.fixture(scope="module")
def weyl1():
    return desk_model("weyl1")


@pytest.fixture(scope="module")
def weyl1_z2():
    return desk_model("weyl1_z2")


def test_weyl1_filtered_hh(weyl1):
    vals = [weyl1.hh_filtered(k, 3)["value"] for k in range(3)]
    assert vals == [0, 0, 1]
    assert all(weyl1.hh_filtered(k, 3)["stabilized"] for k in range(3))


def test_routes_agree_in_low_degrees(weyl1_z2):
    for k in (0, 1):
        tw = weyl1_z2.hh_filtered(k, 3, route="twisted")
        cr = weyl1_z2.hh_filtered(k, 3, route="crossed")
        assert tw["value"] == cr["value"]
    assert weyl1_z2.hh_filtered(0, 3)["value"] == 1


def test_e1_matches_invariant_forms(weyl1_z2):
    _, rep = weyl1_z2.e1_check(2, 2, raise_on_mismatch=False)
    assert rep and all(e["pass"] for e in rep)


def test_d1_is_delta(weyl1_z2):
    rep = weyl1_z2.verify_d1_equals_delta(3, 2)
    assert rep and all(e["pass"] for e in rep)


def test_abutment_small(weyl1):
    for k in range(3):
        r = weyl1.abutment_check(k, 2, 0, route="twisted")
        assert r["pass"], r


def test_page_dimensions_shrink(weyl1):
    # E^r dims are non-increasing in r and E^inf sits below E^1 everywhere
    for k in range(3):
        for p in range(3):
            secs = weyl1.sectors("hh", k, p, 0)
            e1 = sum(weyl1.e_dim(k, p, 1, 0, s) for s in secs)
            e2 = sum(weyl1.e_dim(k, p, 2, 0, s) for s in secs)
            einf = sum(weyl1.e_dim(k, p, INFINITY, 0, s, depth=4) for s in secs)
            assert e1 >= e2 >= einf >= 0


def test_symbol_model_traces():
    res = symbol_trace_count(symbol_model(2, (-3, 3)))
    assert res["total"] == 2 and res["stabilized"]
    fm = desk_model("symbol")
    with pytest.raises(UnsupportedModel):
        fm.hh_filtered(1, 0)
    with pytest.raises(UnsupportedModel):
        fm.e1_check(1, 1)


def test_unknown_desk_model():
    with pytest.raises(UnsupportedModel):
        desk_model("weyl7")
