"""Exact sparse linear algebra over the rationals.

Scalars are ``fractions.Fraction`` (plain ``int`` entries are accepted too and
mix exactly with fractions).  Matrices are stored column-wise as dicts
``row -> value``; every homology number in the package comes out of
:func:`rank` below.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

from .errors import CompositionNonzero

Scalar = Fraction
Vector = Dict[int, object]


def to_scalar(value) -> Fraction:
    """Parse an exact rational from an int, Fraction or a "p/q" string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            num, den = int(num), int(den)
            if den == 0:
                raise ZeroDivisionError(f"zero denominator in {value!r}")
            return Fraction(num, den)
        return Fraction(int(text))
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def scalar_str(value) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _clean(value):
    # keep integers as ints: the arithmetic stays exact and much faster
    if isinstance(value, Fraction) and value.denominator == 1:
        return value.numerator
    return value


def vec_add(target: Vector, source: Mapping[int, object], coeff=1) -> Vector:
    """target += coeff * source, in place, dropping zeros."""
    for i, v in source.items():
        x = target.get(i, 0) + coeff * v
        if x:
            target[i] = x
        else:
            target.pop(i, None)
    return target


class SparseMatrix:
    """Immutable-by-convention sparse rational matrix, stored by columns."""

    __slots__ = ("nrows", "ncols", "_cols")

    def __init__(self, nrows: int, ncols: int, cols: Optional[Sequence[Mapping[int, object]]] = None):
        self.nrows = nrows
        self.ncols = ncols
        if cols is None:
            self._cols = tuple({} for _ in range(ncols))
        else:
            if len(cols) != ncols:
                raise ValueError("column count mismatch")
            out = []
            for col in cols:
                c = {}
                for i, v in col.items():
                    if v:
                        if not 0 <= i < nrows:
                            raise IndexError(f"row index {i} out of range {nrows}")
                        c[i] = _clean(v)
                out.append(c)
            self._cols = tuple(out)

    # construction -------------------------------------------------------
    @classmethod
    def from_entries(cls, nrows, ncols, entries: Mapping[tuple, object]):
        cols = [dict() for _ in range(ncols)]
        for (i, j), v in entries.items():
            if v:
                cols[j][i] = v
        return cls(nrows, ncols, cols)

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence]):
        nrows = len(rows)
        ncols = len(rows[0]) if nrows else 0
        cols = [dict() for _ in range(ncols)]
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged dense matrix")
            for j, v in enumerate(row):
                v = to_scalar(v) if isinstance(v, str) else v
                if v:
                    cols[j][i] = v
        return cls(nrows, ncols, cols)

    @classmethod
    def identity(cls, n):
        return cls(n, n, [{i: 1} for i in range(n)])

    @classmethod
    def zero(cls, nrows, ncols):
        return cls(nrows, ncols)

    # access -------------------------------------------------------------
    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def entries(self) -> Dict[tuple, object]:
        return {(i, j): v for j, col in enumerate(self._cols) for i, v in col.items()}

    def column(self, j) -> Dict[int, object]:
        return dict(self._cols[j])

    def columns(self):
        return self._cols

    def rows(self) -> List[Dict[int, object]]:
        out = [dict() for _ in range(self.nrows)]
        for j, col in enumerate(self._cols):
            for i, v in col.items():
                out[i][j] = v
        return out

    def nnz(self):
        return sum(len(c) for c in self._cols)

    def __getitem__(self, ij):
        i, j = ij
        return self._cols[j].get(i, 0)

    def to_dense(self):
        rows = [[0] * self.ncols for _ in range(self.nrows)]
        for j, col in enumerate(self._cols):
            for i, v in col.items():
                rows[i][j] = v
        return rows

    def is_zero(self):
        return not any(self._cols)

    def first_nonzero_column(self):
        """(j, column) of the first nonzero column, or None."""
        for j, col in enumerate(self._cols):
            if col:
                return j, dict(col)
        return None

    # algebra ------------------------------------------------------------
    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        left = self._cols
        out = []
        for col in other._cols:
            acc: Dict[int, object] = {}
            for k, v in col.items():
                for i, u in left[k].items():
                    acc[i] = acc.get(i, 0) + u * v
            out.append({i: x for i, x in acc.items() if x})
        return SparseMatrix(self.nrows, other.ncols, out)

    def apply(self, vec: Mapping[int, object]) -> Dict[int, object]:
        acc: Dict[int, object] = {}
        for k, v in vec.items():
            for i, u in self._cols[k].items():
                acc[i] = acc.get(i, 0) + u * v
        return {i: _clean(x) for i, x in acc.items() if x}

    def _combine(self, other, sign):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        out = []
        for a, b in zip(self._cols, other._cols):
            c = dict(a)
            vec_add(c, b, sign)
            out.append(c)
        return SparseMatrix(self.nrows, self.ncols, out)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "SparseMatrix":
        return SparseMatrix(self.nrows, self.ncols, [{i: c * v for i, v in col.items()} for col in self._cols])

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.ncols, self.nrows, self.rows())

    def submatrix(self, rows: Optional[Sequence[int]] = None, cols: Optional[Sequence[int]] = None):
        """Select (and re-index) the given rows and columns, in the given order."""
        cols = range(self.ncols) if cols is None else cols
        if rows is None:
            return SparseMatrix(self.nrows, len(cols), [self._cols[j] for j in cols])
        pos = {r: n for n, r in enumerate(rows)}
        out = []
        for j in cols:
            out.append({pos[i]: v for i, v in self._cols[j].items() if i in pos})
        return SparseMatrix(len(pos), len(cols), out)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and all(
            a == b for a, b in zip(self._cols, other._cols))

    def __hash__(self):
        return hash((self.nrows, self.ncols, self.nnz()))

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"


def hstack(mats: Sequence[SparseMatrix], nrows=None) -> SparseMatrix:
    if nrows is None:
        nrows = mats[0].nrows
    cols = []
    for m in mats:
        if m.nrows != nrows:
            raise ValueError("row mismatch in hstack")
        cols.extend(m.columns())
    return SparseMatrix(nrows, len(cols), cols)


def vstack(mats: Sequence[SparseMatrix], ncols=None) -> SparseMatrix:
    if ncols is None:
        ncols = mats[0].ncols
    cols = [dict() for _ in range(ncols)]
    offset = 0
    for m in mats:
        if m.ncols != ncols:
            raise ValueError("column mismatch in vstack")
        for j, col in enumerate(m.columns()):
            for i, v in col.items():
                cols[j][i + offset] = v
        offset += m.nrows
    return SparseMatrix(offset, ncols, cols)


def block_matrix(blocks: Sequence[Sequence[Optional[SparseMatrix]]], row_sizes, col_sizes):
    """Assemble a block matrix; ``None`` blocks are zero."""
    nrows, ncols = sum(row_sizes), sum(col_sizes)
    cols = [dict() for _ in range(ncols)]
    r0 = 0
    for bi, brow in enumerate(blocks):
        c0 = 0
        for bj, blk in enumerate(brow):
            if blk is not None:
                if blk.shape != (row_sizes[bi], col_sizes[bj]):
                    raise ValueError(f"block {bi},{bj} has shape {blk.shape}")
                for j, col in enumerate(blk.columns()):
                    target = cols[c0 + j]
                    for i, v in col.items():
                        target[r0 + i] = v
            c0 += col_sizes[bj]
        r0 += row_sizes[bi]
    return SparseMatrix(nrows, ncols, cols)


# ---------------------------------------------------------------------------
# elimination

def _integer_vector(vec: Mapping[int, object]) -> Dict[int, int]:
    """Scale a rational vector to a primitive integer vector (same span)."""
    den = 1
    for v in vec.values():
        if isinstance(v, Fraction) and v.denominator != 1:
            den = den * v.denominator // gcd(den, v.denominator)
    out = {}
    g = 0
    for i, v in vec.items():
        x = v * den
        x = x.numerator if isinstance(x, Fraction) else int(x)
        if x:
            out[i] = x
            g = gcd(g, x)
    if g > 1:
        out = {i: x // g for i, x in out.items()}
    return out


def _echelon_rank(vectors: Iterable[Mapping[int, object]], order: Dict[int, int], limit: int) -> int:
    """Fraction-free echelon elimination; returns the rank of the vectors.

    ``order`` ranks coordinates: the pivot of a vector is its coordinate
    with the smallest rank.  Choosing sparse coordinates first is the
    Markowitz-style heuristic that keeps fill-in low.
    """
    pivots: Dict[int, tuple] = {}
    key = order.__getitem__
    rank = 0
    for vec in vectors:
        if rank >= limit:
            break
        v = _integer_vector(vec)
        while v:
            c = min(v, key=key)
            hit = pivots.get(c)
            if hit is None:
                lead = v[c]
                if lead < 0:
                    v = {i: -x for i, x in v.items()}
                pivots[c] = (v, abs(lead))
                rank += 1
                break
            p, plead = hit
            a = v[c]
            if plead == 1:
                for i, x in p.items():
                    y = v.get(i, 0) - a * x
                    if y:
                        v[i] = y
                    else:
                        del v[i]
            else:
                g = gcd(a, plead)
                ma, mp = plead // g, a // g
                nv = {}
                for i, x in v.items():
                    nv[i] = ma * x
                for i, x in p.items():
                    y = nv.get(i, 0) - mp * x
                    if y:
                        nv[i] = y
                    else:
                        del nv[i]
                g = 0
                for x in nv.values():
                    g = gcd(g, x)
                    if g == 1:
                        break
                if g > 1:
                    nv = {i: x // g for i, x in nv.items()}
                v = nv
    return rank


def rank_of_vectors(vectors: Sequence[Mapping[int, object]]) -> int:
    vectors = [v for v in vectors if v]
    if not vectors:
        return 0
    counts: Dict[int, int] = {}
    for v in vectors:
        for i in v:
            counts[i] = counts.get(i, 0) + 1
    order = {i: n for n, i in enumerate(sorted(counts, key=lambda i: (counts[i], i)))}
    vectors.sort(key=len)
    return _echelon_rank(vectors, order, min(len(vectors), len(counts)))


def rank(m: SparseMatrix) -> int:
    """Exact rank over the rationals."""
    if m.nrows == 0 or m.ncols == 0:
        return 0
    cols = [c for c in m.columns() if c]
    if not cols:
        return 0
    # eliminate along the shorter side
    if len(cols) > m.nrows:
        cols = [r for r in m.rows() if r]
    return rank_of_vectors(cols)


def _rref(vectors: Iterable[Mapping[int, object]]) -> List[Dict[int, Fraction]]:
    """Reduced row echelon basis of the span, pivots in natural index order.

    Invariant kept throughout: every stored pivot row has a leading 1 and
    zeros in all other pivot columns.
    """
    pivots: Dict[int, Dict[int, Fraction]] = {}
    for vec in vectors:
        v = {i: Fraction(x) for i, x in vec.items() if x}
        for c in [c for c in v if c in pivots]:
            a = v.get(c)
            if a:
                vec_add(v, pivots[c], -a)
        if not v:
            continue
        c = min(v)
        lead = v[c]
        if lead != 1:
            v = {i: x / lead for i, x in v.items()}
        for p in pivots.values():
            a = p.get(c)
            if a:
                vec_add(p, v, -a)
        pivots[c] = v
    return [{i: _clean(x) for i, x in sorted(pivots[c].items())} for c in sorted(pivots)]


class Subspace:
    """A subspace of Q^ambient_dim with a canonical reduced echelon basis."""

    __slots__ = ("ambient_dim", "basis")

    def __init__(self, ambient_dim: int, basis: Sequence[Mapping[int, object]] = ()):
        self.ambient_dim = ambient_dim
        self.basis = tuple(_rref(basis))

    @classmethod
    def full(cls, n):
        return cls(n, [{i: 1} for i in range(n)])

    @property
    def dim(self):
        return len(self.basis)

    def pivots(self):
        return [min(v) for v in self.basis]

    def contains(self, vec: Mapping[int, object]) -> bool:
        v = {i: Fraction(x) for i, x in vec.items() if x}
        for b in self.basis:
            c = min(b)
            a = v.get(c)
            if a:
                vec_add(v, b, -a)
        return not v

    def __add__(self, other: "Subspace") -> "Subspace":
        return Subspace(self.ambient_dim, list(self.basis) + list(other.basis))

    def as_matrix(self) -> SparseMatrix:
        """Basis vectors as the columns of a matrix."""
        return SparseMatrix(self.ambient_dim, self.dim, self.basis)

    def __eq__(self, other):
        return (isinstance(other, Subspace) and self.ambient_dim == other.ambient_dim
                and self.basis == other.basis)

    def __hash__(self):
        return hash((self.ambient_dim, len(self.basis)))

    def __repr__(self):
        return f"Subspace(dim={self.dim} in Q^{self.ambient_dim})"


def row_space(m: SparseMatrix) -> Subspace:
    return Subspace(m.ncols, m.rows())


def column_space(m: SparseMatrix) -> Subspace:
    return Subspace(m.nrows, m.columns())


def kernel_basis(m: SparseMatrix) -> Subspace:
    """Canonical echelon basis of {x : m x = 0}."""
    rref_rows = _rref(m.rows())
    pivot_of = {min(r): r for r in rref_rows}
    free = [j for j in range(m.ncols) if j not in pivot_of]
    vecs = []
    for f in free:
        v = {f: 1}
        for c, r in pivot_of.items():
            a = r.get(f)
            if a:
                v[c] = -a
        vecs.append(v)
    return Subspace(m.ncols, vecs)


def solve(m: SparseMatrix, rhs: Mapping[int, object]) -> Optional[Dict[int, Fraction]]:
    """Some exact solution x of m x = rhs, or None when inconsistent."""
    aug = m.ncols  # rhs lives in an extra coordinate
    rows = m.rows()
    for i, v in rhs.items():
        if v:
            rows[i][aug] = v
    basis = _rref(rows)
    x: Dict[int, Fraction] = {}
    for r in basis:
        c = min(r)
        if c == aug:
            return None
        val = r.get(aug, 0)
        if val:
            x[c] = Fraction(val)
    return x


def homology_dim(d_in: SparseMatrix, d_out: SparseMatrix, check=True) -> int:
    """dim ker(d_out) - rank(d_in), with d_in: C_{k+1} -> C_k and d_out: C_k -> C_{k-1}."""
    if d_in.nrows != d_out.ncols:
        raise ValueError(f"incompatible shapes {d_in.shape} and {d_out.shape}")
    if check:
        comp = d_out @ d_in
        bad = comp.first_nonzero_column()
        if bad is not None:
            raise CompositionNonzero(
                f"composite differential nonzero on input basis vector {bad[0]}",
                witness={"input": bad[0], "image": bad[1]})
    return d_out.ncols - rank(d_out) - rank(d_in)
