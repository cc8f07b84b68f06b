from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossedhom.algebras import LinearAction, crossed_product, polynomial_algebra, truncated_polynomial
from crossedhom.groups import close_group
from crossedhom.hochschild import (HochschildModel, connes_B, hochschild_b, map_F_matrix, map_G_matrix,
                                   twisted_b, twisted_for_class)


def poly_dim(n, w):
    return comb(w + n - 1, n - 1) if w >= 0 else 0


def crossed(base, gens):
    return crossed_product(base, LinearAction(close_group(gens), base))


@pytest.mark.parametrize("n", [1, 2])
def test_hkr_dimensions(n):
    m = HochschildModel(polynomial_algebra(n))
    for k in range(3):
        for w in range(4):
            assert m.hh(k, w) == comb(n, k) * poly_dim(n, w - k)


def truncated_oracle(n, k, w):
    """HH_k(Q[x]/x^n) at weight w: HH_0 = A; HH_{2i-1} at (i-1)n + 1..(i-1)n + n-1; HH_{2i} at in + 1..in + n-1."""
    if k == 0:
        return int(0 <= w <= n - 1)
    i = (k + 1) // 2
    base = (i - 1) * n if k % 2 else i * n
    return int(base + 1 <= w <= base + n - 1)


def test_truncated_polynomial_oracle():
    m = HochschildModel(truncated_polynomial(1, 4))
    for k in range(4):
        for w in range(8):
            assert m.hh(k, w) == truncated_oracle(4, k, w), (k, w)


@settings(max_examples=12, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.sampled_from(["poly", "trunc", "sign"]))
def test_b_squared_and_mixed_relations(k, w, which):
    base = polynomial_algebra(1) if which == "poly" else truncated_polynomial(1, 3)
    alg = crossed(base, [[[-1]]]) if which == "sign" else base
    m = HochschildModel(alg)
    src, mid, low = m.slice(k + 1, w), m.slice(k, w), m.slice(k - 1, w)
    assert (m.b_matrix(mid, low) @ m.b_matrix(src, mid)).is_zero()
    bb = connes_B(m, m.slice(k, w))
    up = m.slice(k + 2, w)
    assert (connes_B(m, m.slice(k + 1, w)) @ bb).shape[0] == up.dim
    assert (connes_B(m, m.slice(k + 1, w)) @ bb).is_zero()
    lhs = hochschild_b(m, m.slice(k + 1, w)) @ bb + connes_B(m, m.slice(k - 1, w)) @ hochschild_b(m, mid)
    assert lhs.is_zero()


def test_crossed_product_z2_on_line():
    """Q[x] ⋊ Z/2 (x -> -x): identity class gives invariant forms, the -1 class the point."""
    m = HochschildModel(crossed(polynomial_algebra(1), [[[-1]]]))
    assert len(m.classes) == 2
    labels = [m.class_label(c) for c in range(2)]
    ident = next(c for c in range(2) if m.group.matrix(labels[c]) == ((1,),))
    minus = 1 - ident
    assert [m.hh(0, w, ident) for w in range(5)] == [1, 0, 1, 0, 1]
    assert [m.hh(1, w, ident) for w in range(5)] == [0, 0, 1, 0, 1]
    assert [m.hh(0, w, minus) for w in range(5)] == [1, 0, 0, 0, 0]
    assert all(m.hh(1, w, minus) == 0 for w in range(5))


def test_group_algebra_s3_hh0_counts_classes():
    s3 = [[[0, 1, 0], [1, 0, 0], [0, 0, 1]], [[0, 1, 0], [0, 0, 1], [1, 0, 0]]]
    ground = truncated_polynomial(3, 1)
    from crossedhom.problems import TrivialAction
    m = HochschildModel(crossed_product(ground, TrivialAction(close_group(s3), ground)))
    assert m.hh(0, 0) == 3
    assert m.hh(1, 0) == 0


def test_twisted_chain_maps_and_retraction():
    m = HochschildModel(crossed(polynomial_algebra(2), [[[0, 1], [1, 0]]]))
    for cls in range(len(m.classes)):
        tw = twisted_for_class(m, cls)
        for k in range(3):
            for w in range(3):
                ts, tl = tw.slice(k, w), tw.slice(k - 1, w)
                assert (twisted_b(tw, tl) @ twisted_b(tw, ts)).is_zero() if k >= 1 else True
                cs, cl = m.slice(k, w, cls), m.slice(k - 1, w, cls)
                F_hi, F_lo = map_F_matrix(m, tw, ts, cs), map_F_matrix(m, tw, tl, cl)
                assert (m.b_matrix(cs, cl) @ F_hi - F_lo @ tw.bh_matrix(ts, tl)).is_zero()
                G_hi, G_lo = map_G_matrix(m, tw, cs, ts), map_G_matrix(m, tw, cl, tl)
                assert (tw.bh_matrix(ts, tl) @ G_hi - G_lo @ m.b_matrix(cs, cl)).is_zero()
                P = tw.projector(ts)
                assert G_hi @ F_hi @ P == P


def test_twisted_connes_operator_on_invariants():
    m = HochschildModel(crossed(polynomial_algebra(1), [[[-1]]]))
    for cls in range(2):
        tw = twisted_for_class(m, cls)
        for k in range(3):
            for w in range(4):
                sl = tw.slice(k, w)
                P = tw.projector(sl)
                for col in P.columns():
                    chain = {sl.basis[i]: v for i, v in col.items()}
                    once = {}
                    for t, c in chain.items():
                        for t2, c2 in tw.Bh_tensor(t).items():
                            once[t2] = once.get(t2, 0) + c * c2
                    twice = {}
                    for t, c in once.items():
                        for t2, c2 in tw.Bh_tensor(t).items():
                            twice[t2] = twice.get(t2, 0) + c * c2
                    assert not {t: v for t, v in twice.items() if v}


def test_filtered_model_refuses_graded_entry_points():
    from crossedhom.algebras import weyl_algebra
    m = HochschildModel(weyl_algebra(1))
    with pytest.raises(ValueError):
        m.hh(0, 1)
