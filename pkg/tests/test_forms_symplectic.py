from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossedhom.algebras import polynomial_algebra
from crossedhom.errors import NotSymplecticFixedSpace
from crossedhom.forms import PolyForm, d_matrix, form_dims, hkr_chi, hkr_E
from crossedhom.groups import close_group
from crossedhom.koszul import (FixedSpace, fixed_forms_dim, invariant_koszul_homology, koszul_complex,
                               twisted_via_koszul)
from crossedhom.symplectic import (SymplecticSpace, check_star_delta_relations, homotopy_identity_check,
                                   poisson_homology, de_rham_dim)


@st.composite
def forms(draw, n=2, max_terms=4):
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        exps = tuple(draw(st.integers(0, 2)) for _ in range(n))
        k = draw(st.integers(0, n))
        idx = tuple(sorted(draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k, unique=True))))
        terms[(exps, idx)] = draw(st.integers(-3, 3))
    return PolyForm(n, terms)


@settings(max_examples=50, deadline=None)
@given(forms())
def test_d_squared_zero(f):
    assert not f.d().d()


@settings(max_examples=50, deadline=None)
@given(forms(), forms())
def test_leibniz(a, b):
    # d(a ∧ b) = da ∧ b + (-1)^|a| a ∧ db on homogeneous pieces
    for (ea, Ia), ca in a.terms.items():
        pa = PolyForm(2, {(ea, Ia): ca})
        lhs = pa.wedge(b).d()
        sign = -1 if len(Ia) % 2 else 1
        rhs = pa.d().wedge(b) + pa.wedge(b.d()).scale(sign)
        assert lhs == rhs


@settings(max_examples=40, deadline=None)
@given(forms())
def test_chi_after_E_is_identity(f):
    assert hkr_chi(2, hkr_E(f)) == f


def test_form_dims_and_de_rham():
    for n in (1, 2, 3):
        for k in range(n + 1):
            for w in range(5):
                assert form_dims(n, k, w) == comb(n, k) * (comb(w - k + n - 1, n - 1) if w >= k else 0)
    # polynomial de Rham cohomology is Q in degree 0, weight 0
    for k in range(3):
        for w in range(5):
            assert de_rham_dim(2, k, w) == (1 if (k, w) == (0, 0) else 0)
    assert (d_matrix(2, 1, 3) @ d_matrix(2, 0, 3)).is_zero()


def test_koszul_acyclic_and_twisted():
    ring = polynomial_algebra(2)
    K = koszul_complex(ring, [{(1, 0): 1}, {(0, 1): 1}])
    assert [[K.homology(l, w) for w in range(4)] for l in range(3)] == [[1, 0, 0, 0], [0] * 4, [0] * 4]
    # the swap on Q^2: twisted homology is forms on the fixed line (x + y)
    dims = twisted_via_koszul(2, ((0, 1), (1, 0)), 2, 3)
    assert all(dims[(l, w)] == fixed_forms_dim(1, l, w) for l in range(3) for w in range(4))


def test_invariant_pipelines_agree_rotation():
    g = close_group([[[0, -1], [1, 0]]])
    for gam in range(g.order):
        fs = FixedSpace(g, gam)
        for l in range(3):
            for w in range(4):
                assert invariant_koszul_homology(g, gam, l, w) == fs.invariant_dim(l, w)


def test_symplectic_relations_small_window():
    for n in (1, 2):
        sp = SymplecticSpace(n)
        rep = check_star_delta_relations(sp, 3) + homotopy_identity_check(sp, 3)
        assert rep and all(e["pass"] for e in rep), [e for e in rep if not e["pass"]][:1]


def test_bracket_convention_and_jacobi():
    sp = SymplecticSpace(1)
    x, xi = {(1, 0): 1}, {(0, 1): 1}
    assert sp.bracket(x, xi) == {(0, 0): 1}
    f, g, h = {(2, 1): 1}, {(1, 2): Fraction(1, 2)}, {(3, 0): 1, (0, 1): 2}

    def add(*ps):
        out = {}
        for p in ps:
            for k, v in p.items():
                out[k] = out.get(k, 0) + v
        return {k: v for k, v in out.items() if v}

    jac = add(sp.bracket(f, sp.bracket(g, h)), sp.bracket(g, sp.bracket(h, f)), sp.bracket(h, sp.bracket(f, g)))
    assert jac == {}


def test_poisson_homology_is_de_rham_in_complementary_degree():
    sp = SymplecticSpace(1)
    # HK_k = H^{2n-k}: only the volume form class survives, in degree 2
    assert poisson_homology(sp, 2, 2) == 1
    assert poisson_homology(sp, 0, 0) == 0
    assert poisson_homology(sp, 1, 3) == 0


def test_degenerate_structures_rejected():
    with pytest.raises(ValueError):
        SymplecticSpace(1, [[0, 0], [0, 0]])
    with pytest.raises(NotSymplecticFixedSpace):
        SymplecticSpace.from_poisson([[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
