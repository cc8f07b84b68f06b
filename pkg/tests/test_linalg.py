from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossedhom.errors import CompositionNonzero
from crossedhom.linalg import (SparseMatrix, Subspace, column_space, homology_dim, kernel_basis, rank,
                               rank_of_vectors, scalar_str, solve, to_scalar)

small = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def matrices(draw, max_dim=6):
    r = draw(st.integers(0, max_dim))
    c = draw(st.integers(0, max_dim))
    rows = [[draw(st.one_of(st.just(Fraction(0)), small)) for _ in range(c)] for _ in range(r)]
    return SparseMatrix.from_dense(rows) if r and c else SparseMatrix.zero(r, c)


def dense_rank(rows):
    """Textbook Gaussian elimination on Fractions, the oracle for the sparse code."""
    m = [list(map(Fraction, r)) for r in rows]
    rk, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rk < len(m) and col < ncols:
        piv = next((i for i in range(rk, len(m)) if m[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        m[rk], m[piv] = m[piv], m[rk]
        for i in range(len(m)):
            if i != rk and m[i][col] != 0:
                f = m[i][col] / m[rk][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rk])]
        rk += 1
        col += 1
    return rk


def test_scalars():
    assert to_scalar("3/6") == Fraction(1, 2)
    assert to_scalar(" -4 ") == -4
    assert scalar_str(Fraction(4, 2)) == "2"
    assert scalar_str(Fraction(-1, 3)) == "-1/3"
    with pytest.raises(ZeroDivisionError):
        to_scalar("1/0")
    with pytest.raises(TypeError):
        to_scalar(0.5)
    with pytest.raises(TypeError):
        to_scalar(True)


def test_rank_known():
    m = SparseMatrix.from_dense([[1, 2, 3], [2, 4, 6], [0, 1, Fraction(1, 2)]])
    assert rank(m) == 2
    assert rank(SparseMatrix.identity(5)) == 5
    assert rank(SparseMatrix.zero(3, 4)) == 0


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_rank_matches_dense_oracle(m):
    assert rank(m) == dense_rank(m.to_dense())


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_rank_transpose_and_kernel(m):
    assert rank(m) == rank(m.transpose())
    ker = kernel_basis(m)
    assert ker.dim == m.ncols - rank(m)
    for v in ker.basis:
        assert not m.apply(v)


@settings(max_examples=50, deadline=None)
@given(matrices(), st.lists(small, min_size=6, max_size=6))
def test_solve_consistent_rhs(m, xs):
    x0 = {j: xs[j] for j in range(m.ncols) if xs[j]}
    b = m.apply(x0)
    x = solve(m, b)
    assert x is not None
    assert m.apply(x) == {i: v for i, v in b.items() if v}


def test_solve_inconsistent():
    m = SparseMatrix.from_dense([[1, 1], [2, 2]])
    assert solve(m, {0: 1, 1: 3}) is None


@settings(max_examples=40, deadline=None)
@given(matrices(), matrices())
def test_product_against_dense(a, b):
    if a.ncols != b.nrows:
        return
    prod = (a @ b).to_dense() if a.nrows and b.ncols else []
    A, B = a.to_dense(), b.to_dense()
    expect = [[sum(A[i][k] * B[k][j] for k in range(a.ncols)) for j in range(b.ncols)] for i in range(a.nrows)]
    if a.nrows and b.ncols:
        assert prod == expect


def test_subspace_canonical():
    u = Subspace(3, [{0: 1, 1: 1}, {1: 2}])
    v = Subspace(3, [{0: 2}, {0: 1, 1: -1}])
    assert u == v and u.dim == 2
    assert u.contains({0: 3, 1: 7}) and not u.contains({2: 1})
    assert column_space(SparseMatrix.from_dense([[1, 2], [1, 2]])).dim == 1
    assert rank_of_vectors([{0: 1}, {0: 2}, {1: Fraction(1, 3)}]) == 2


def test_homology_dim_and_composition_check():
    # circle: C_1 = Q^2 -> C_0 = Q^2 with boundary e0 - e1 on both edges
    d1 = SparseMatrix.from_dense([[1, -1], [-1, 1]])
    z = SparseMatrix.zero(2, 0)
    assert homology_dim(SparseMatrix.zero(2, 0), d1) == 1  # H_1
    assert homology_dim(d1, SparseMatrix.zero(0, 2)) == 1  # H_0
    with pytest.raises(CompositionNonzero):
        homology_dim(SparseMatrix.identity(2), SparseMatrix.identity(2))
    with pytest.raises(ValueError):
        homology_dim(z, SparseMatrix.zero(1, 3))
