from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossedhom.algebras import (LinearAction, SymbolModel, associated_graded, crossed_product, declare_elliptic,
                                 polynomial_algebra, symbol_model, truncated_polynomial, weyl_algebra,
                                 weyl_gr_isomorphism)
from crossedhom.errors import ActionInvalid, BadWindow, NotElliptic, NotFinite, NotHomomorphism
from crossedhom.groups import (average_projector, centralizer, close_group, conjugacy_classes, fixed_decomposition,
                               to_sparse)
from crossedhom.linalg import rank

S3 = [[[0, 1, 0], [1, 0, 0], [0, 0, 1]], [[0, 1, 0], [0, 0, 1], [1, 0, 0]]]
ROT4 = [[[0, -1], [1, 0]]]


def test_closure_orders():
    assert close_group(S3).order == 6
    assert close_group(ROT4).order == 4
    assert close_group([[[-1]]]).order == 2
    with pytest.raises(NotFinite):
        close_group([[[1, 1], [0, 1]]], cap=50)


def test_conjugacy_classes_s3():
    g = close_group(S3)
    classes = conjugacy_classes(g)
    assert sorted(c.size for c in classes) == [1, 2, 3]
    # class equation and |G| = |class| * |centralizer|
    assert sum(c.size for c in classes) == 6
    for c in classes:
        assert c.size * len(c.centralizer) == 6
        assert centralizer(g, c.representative) == c.centralizer


def test_group_axioms():
    g = close_group(S3)
    e = g.identity_index
    for a in range(g.order):
        assert g.mul(a, g.inv(a)) == e
        for b in range(g.order):
            for c in range(g.order):
                assert g.mul(g.mul(a, b), c) == g.mul(a, g.mul(b, c))


def test_fixed_decomposition_dims():
    g = close_group(ROT4)
    dims = sorted(fixed_decomposition(g, x).fixed_dim for x in range(4))
    assert dims == [0, 0, 0, 2]
    s = close_group(S3)
    assert sorted(fixed_decomposition(s, x).fixed_dim for x in range(6)) == [1, 1, 2, 2, 2, 3]


def test_average_projector_is_idempotent_with_trace_fixed_dim():
    g = close_group(S3)
    p = average_projector(g, range(g.order), lambda h: to_sparse(g.matrix(h)))
    assert p @ p == p
    assert rank(p) == 1  # the line x = y = z
    with pytest.raises(NotHomomorphism):
        average_projector(g, range(g.order), lambda h: to_sparse(g.matrix(h)).scale(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))
def test_weyl_associative_and_commutator(i, j, k):
    w = weyl_algebra(1)
    labels = w.basis_up_to(0, 3)
    a, b, c = labels[i * 3], labels[j * 2], labels[k * 4]
    left = w.elt_mul(w.mul(a, b), {c: 1})
    right = w.elt_mul({a: 1}, w.mul(b, c))
    assert left == right
    x, xi = (1, 0), (0, 1)
    comm = dict(w.mul(xi, x))
    for key, v in w.mul(x, xi).items():
        comm[key] = comm.get(key, 0) - v
    assert {k2: v for k2, v in comm.items() if v} == {(0, 0): 1}


def test_window_associativity_and_units():
    for alg in (polynomial_algebra(2), truncated_polynomial(1, 4), weyl_algebra(1)):
        assert alg.check_associativity(4) is None
        assert alg.check_unit(alg.basis_up_to(0, 3)) is None
        assert alg.check_weight_law(alg.basis_up_to(0, 3)) is None


def test_truncation_kills_high_powers():
    a = truncated_polynomial(1, 4)
    assert a.mul((2,), (2,)) == {}
    assert a.mul((1,), (2,)) == {(3,): 1}


def test_crossed_product_law_and_bad_action():
    base = polynomial_algebra(2)
    g = close_group([[[0, 1], [1, 0]]])
    cp = crossed_product(base, LinearAction(g, base))
    assert cp.check_law(3) is None
    assert cp.check_associativity(2) is None
    with pytest.raises(ActionInvalid):
        LinearAction(close_group([[[-1]]]), base)
    w = weyl_algebra(1)
    # a rotation mixes x and xi, so it breaks the charge sectors
    with pytest.raises(ActionInvalid):
        crossed_product(w, LinearAction(close_group(ROT4), w))
    w2 = weyl_algebra(1, sector="parity")
    assert crossed_product(w2, LinearAction(close_group(ROT4), w2)).check_law(2) is None


def test_gr_weyl_is_polynomial():
    poly, _, failure = weyl_gr_isomorphism(weyl_algebra(1), 4)
    assert failure is None and poly.n == 2
    gr = associated_graded(weyl_algebra(1))
    assert gr.mul((0, 1), (1, 0)) == {(1, 1): 1}


def test_symbol_model():
    with pytest.raises(BadWindow):
        symbol_model(2, (1, 3))
    s = symbol_model(2, (-3, 2))
    assert isinstance(s, SymbolModel)
    assert s.check_associativity(1, labels=s.basis_up_to(-1, 1)[:12]) is None
    # xi is elliptic and invertible in the working quotient; the Weyl algebra has no such element
    declare_elliptic(s, {(0, 1, 0): 1})
    with pytest.raises(NotElliptic):
        declare_elliptic(weyl_algebra(1), {(1, 0): 1})
    with pytest.raises(NotElliptic):
        declare_elliptic(s, {(0, 2, 0): 1})
