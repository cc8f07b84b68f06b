"""Finite groups of invertible rational matrices.

A group is stored as a sorted, duplicate-free tuple of matrices (tuples of
tuples of Fractions).  Elements are referred to by their index in that
tuple everywhere else in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, List, Mapping, Sequence, Tuple, Union

from .errors import NotFinite, NotHomomorphism
from .linalg import SparseMatrix, Subspace, column_space, kernel_basis, rank, to_scalar

Matrix = Tuple[Tuple[Fraction, ...], ...]


def as_matrix(rows) -> Matrix:
    return tuple(tuple(to_scalar(x) if not isinstance(x, Fraction) else x for x in row) for row in rows)


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    n, m = len(a), len(b[0])
    return tuple(tuple(sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0)) for j in range(m))
                 for i in range(n))


def mat_identity(n) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def mat_inverse(a: Matrix) -> Matrix:
    """Gauss-Jordan inverse; raises ValueError on singular input."""
    n = len(a)
    work = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for c in range(n):
        piv = next((r for r in range(c, n) if work[r][c] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        work[c], work[piv] = work[piv], work[c]
        lead = work[c][c]
        work[c] = [x / lead for x in work[c]]
        for r in range(n):
            if r != c and work[r][c] != 0:
                f = work[r][c]
                work[r] = [x - f * y for x, y in zip(work[r], work[c])]
    return tuple(tuple(row[n:]) for row in work)


def mat_transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a)) if a else a


def to_sparse(a: Matrix) -> SparseMatrix:
    return SparseMatrix.from_dense([list(r) for r in a])


class FiniteMatrixGroup:
    """A finite subgroup of GL_n(Q), elements in lexicographic order."""

    def __init__(self, dim: int, elements: Sequence[Matrix]):
        self.dim = dim
        self.elements: Tuple[Matrix, ...] = tuple(sorted(set(elements), key=_lex_key))
        self.index: Dict[Matrix, int] = {g: i for i, g in enumerate(self.elements)}
        self.identity_index = self.index[mat_identity(dim)]
        self._mul: Dict[Tuple[int, int], int] = {}
        self._inv: Dict[int, int] = {}

    def __len__(self):
        return len(self.elements)

    @property
    def order(self):
        return len(self.elements)

    def matrix(self, i) -> Matrix:
        return self.elements[i]

    def mul(self, i: int, j: int) -> int:
        key = (i, j)
        r = self._mul.get(key)
        if r is None:
            r = self.index[mat_mul(self.elements[i], self.elements[j])]
            self._mul[key] = r
        return r

    def inv(self, i: int) -> int:
        r = self._inv.get(i)
        if r is None:
            r = self.index[mat_inverse(self.elements[i])]
            self._inv[i] = r
        return r

    def conj(self, k: int, g: int) -> int:
        """k g k^-1"""
        return self.mul(self.mul(k, g), self.inv(k))

    def product(self, seq: Sequence[int]) -> int:
        r = self.identity_index
        for g in seq:
            r = self.mul(r, g)
        return r

    def is_trivial(self):
        return len(self.elements) == 1

    def describe(self):
        return [[[str(x) for x in row] for row in g] for g in self.elements]

    def __repr__(self):
        return f"FiniteMatrixGroup(dim={self.dim}, order={self.order})"


def _lex_key(g: Matrix):
    return tuple(x for row in g for x in row)


def close_group(generators: Sequence, cap: int = 10000, dim: int = None) -> FiniteMatrixGroup:
    """Closure of the generators under products (inverses follow by finiteness)."""
    gens = [as_matrix(g) for g in generators]
    if dim is None:
        if not gens:
            raise ValueError("dimension needed for an empty generator list")
        dim = len(gens[0])
    for g in gens:
        if len(g) != dim or any(len(row) != dim for row in g):
            raise ValueError("generators must be square matrices of a common size")
        mat_inverse(g)  # invertibility check
    ident = mat_identity(dim)
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = mat_mul(a, g)
                if b not in seen:
                    seen.add(b)
                    if len(seen) > cap:
                        raise NotFinite(cap)
                    nxt.append(b)
        frontier = nxt
    return FiniteMatrixGroup(dim, seen)


def trivial_group(dim: int) -> FiniteMatrixGroup:
    return FiniteMatrixGroup(dim, [mat_identity(dim)])


@dataclass(frozen=True)
class ConjugacyClass:
    representative: int
    members: Tuple[int, ...]
    centralizer: FrozenSet[int]

    @property
    def size(self):
        return len(self.members)


def conjugacy_classes(g: FiniteMatrixGroup) -> List[ConjugacyClass]:
    done = set()
    out = []
    for x in range(g.order):
        if x in done:
            continue
        members = sorted({g.conj(k, x) for k in range(g.order)})
        done.update(members)
        rep = members[0]  # elements are lex-sorted, so the smallest index is the lex-min matrix
        cent = frozenset(k for k in range(g.order) if g.mul(k, rep) == g.mul(rep, k))
        out.append(ConjugacyClass(rep, tuple(members), cent))
    out.sort(key=lambda c: c.representative)
    return out


def class_lookup(classes: Sequence[ConjugacyClass]) -> Dict[int, int]:
    """element index -> position of its class in ``classes``"""
    return {m: n for n, c in enumerate(classes) for m in c.members}


def centralizer(g: FiniteMatrixGroup, x: int) -> FrozenSet[int]:
    return frozenset(k for k in range(g.order) if g.mul(k, x) == g.mul(x, k))


@dataclass(frozen=True)
class FixedDecomposition:
    gamma: int
    fixed: Subspace
    complement: Subspace

    @property
    def fixed_dim(self):
        return self.fixed.dim


def fixed_decomposition(g: FiniteMatrixGroup, gamma: int) -> FixedDecomposition:
    n = g.dim
    m = g.elements[gamma]
    shifted = to_sparse(tuple(tuple(m[i][j] - (1 if i == j else 0) for j in range(n)) for i in range(n)))
    fixed = kernel_basis(shifted)
    comp = column_space(shifted)
    both = SparseMatrix(n, fixed.dim + comp.dim, list(fixed.basis) + list(comp.basis))
    if fixed.dim + comp.dim != n or rank(both) != n:
        raise AssertionError("fixed space and (1-gamma)V do not form a direct sum")
    gm = to_sparse(m)
    for v in comp.basis:
        if not comp.contains(gm.apply(v)):
            raise AssertionError("(1-gamma)V is not gamma-invariant")
    return FixedDecomposition(gamma, fixed, comp)


def generating_subset(g: FiniteMatrixGroup, subgroup: Sequence[int]) -> List[int]:
    """A small generating set of ``subgroup`` chosen greedily in index order."""
    gens: List[int] = []
    span = {g.identity_index}
    for x in sorted(subgroup):
        if x in span:
            continue
        gens.append(x)
        frontier = list(span)
        # close span under right multiplication by the generators
        while frontier:
            nxt = []
            for a in frontier:
                for s in gens:
                    b = g.mul(a, s)
                    if b not in span:
                        span.add(b)
                        nxt.append(b)
            frontier = nxt
    return gens


Rep = Union[Mapping[int, SparseMatrix], Callable[[int], SparseMatrix]]


def average_projector(g: FiniteMatrixGroup, subgroup: Sequence[int], rep: Rep) -> SparseMatrix:
    """(1/|H|) sum_{h in H} rep(h), after a spot-check that rep is multiplicative."""
    get = rep.__getitem__ if isinstance(rep, Mapping) else rep
    members = sorted(set(subgroup))
    if not members:
        raise ValueError("empty subgroup")
    mats = {h: get(h) for h in members}
    for s in generating_subset(g, members):
        for h in members:
            prod = g.mul(s, h)
            if prod not in mats or mats[s] @ mats[h] != mats[prod]:
                raise NotHomomorphism(f"rep({s})rep({h}) != rep({prod})")
    total = None
    for h in members:
        total = mats[h] if total is None else total + mats[h]
    return total.scale(Fraction(1, len(members)))
