"""Polynomial differential forms and the HKR maps.

A form on Q^n is a dict ``(exponents, I) -> coefficient`` for
sum f dX_{i_1} ∧ ... ∧ dX_{i_k} with I strictly increasing; ``PolyForm``
carries n alongside.  Weight of f dX_I is deg f + |I|.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import factorial
from typing import Dict, Iterable, List, Sequence, Tuple

from .algebras import exponent_vectors
from .hochschild import ChainSlice
from .linalg import SparseMatrix, vec_add

FormKey = Tuple[Tuple[int, ...], Tuple[int, ...]]


class PolyForm:
    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Dict[FormKey, object] = None):
        self.n = n
        self.terms = {k: v for k, v in (terms or {}).items() if v}

    @classmethod
    def monomial(cls, n, exps, idx=(), coeff=1):
        idx = tuple(idx)
        sign, srt = sort_sign(idx)
        if sign == 0:
            return cls(n)
        return cls(n, {(tuple(exps), srt): sign * coeff})

    def __add__(self, other):
        t = dict(self.terms)
        vec_add(t, other.terms)
        return PolyForm(self.n, t)

    def __sub__(self, other):
        t = dict(self.terms)
        vec_add(t, other.terms, -1)
        return PolyForm(self.n, t)

    def scale(self, c):
        return PolyForm(self.n, {k: c * v for k, v in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, PolyForm) and self.n == other.n and self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def bigrades(self):
        return sorted({(len(I), sum(e) + len(I)) for e, I in self.terms})

    def wedge(self, other: "PolyForm") -> "PolyForm":
        return PolyForm(self.n, wedge_terms(self.terms, other.terms))

    def d(self) -> "PolyForm":
        return PolyForm(self.n, exterior_d(self.terms))

    def to_json(self):
        from .linalg import scalar_str
        return [[list(e), list(I), scalar_str(v)] for (e, I), v in sorted(self.terms.items())]

    def __repr__(self):
        return f"PolyForm(n={self.n}, {self.terms})"


def sort_sign(idx: Sequence[int]):
    """(sign, sorted tuple) of a permutation sorting idx; sign 0 on repeats."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    # bubble count of inversions
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign, tuple(sorted(idx))


def merge_sign(I: Tuple[int, ...], J: Tuple[int, ...]):
    """dX_I ∧ dX_J = sign dX_{I∪J}."""
    if set(I) & set(J):
        return 0, ()
    inv = 0
    for a in I:
        for b in J:
            if a > b:
                inv += 1
    return (-1 if inv % 2 else 1), tuple(sorted(I + J))


def wedge_terms(s: Dict[FormKey, object], t: Dict[FormKey, object]) -> Dict[FormKey, object]:
    out: Dict[FormKey, object] = {}
    for (e1, I), a in s.items():
        for (e2, J), b in t.items():
            sign, K = merge_sign(I, J)
            if sign:
                key = (tuple(x + y for x, y in zip(e1, e2)), K)
                out[key] = out.get(key, 0) + sign * a * b
    return {k: v for k, v in out.items() if v}


def differential_of_monomial(exps) -> Dict[FormKey, object]:
    out = {}
    for j, e in enumerate(exps):
        if e:
            m = list(exps)
            m[j] -= 1
            out[(tuple(m), (j,))] = e
    return out


def exterior_d(terms: Dict[FormKey, object]) -> Dict[FormKey, object]:
    out: Dict[FormKey, object] = {}
    for (e, I), c in terms.items():
        for (m, (j,)), a in differential_of_monomial(e).items():
            sign, K = merge_sign((j,), I)
            if sign:
                key = (m, K)
                out[key] = out.get(key, 0) + sign * a * c
    return {k: v for k, v in out.items() if v}


# -- slices of forms -----------------------------------------------------

def form_basis(n: int, k: int, w: int) -> List[FormKey]:
    if k < 0 or k > n or w - k < 0:
        return []
    subsets = list(itertools.combinations(range(n), k))
    return [(e, I) for e in exponent_vectors(n, w - k) for I in subsets]


def form_slice(n: int, k: int, w: int) -> ChainSlice:
    return ChainSlice(k, w, "forms", None, form_basis(n, k, w))


def form_dims(n, k, w):
    return len(form_basis(n, k, w))


def operator_matrix(op, src: ChainSlice, tgt: ChainSlice) -> SparseMatrix:
    """Matrix of op: terms dict -> terms dict, on monomial form bases."""
    cols = []
    for key in src.basis:
        col = {}
        for k2, v in op({key: 1}).items():
            if v:
                i = tgt.index.get(k2)
                if i is None:
                    raise AssertionError(f"{k2} outside target form slice {tgt.coords()}")
                col[i] = col.get(i, 0) + v
        cols.append(col)
    return SparseMatrix(len(tgt), len(src), cols)


def d_matrix(n, k, w) -> SparseMatrix:
    return operator_matrix(exterior_d, form_slice(n, k, w), form_slice(n, k + 1, w))


# -- linear substitutions --------------------------------------------------

class LinearPullback:
    """Pullback along X_j = sum_i M[j][i] Y_i (M is n_old x n_new)."""

    def __init__(self, M: Sequence[Sequence]):
        self.M = [list(row) for row in M]
        self.n_old = len(M)
        self.n_new = len(M[0]) if M else 0
        self._pow: Dict[Tuple[int, int], Dict] = {}
        self._mono: Dict[Tuple, Dict] = {}

    def _linear(self, j):
        return {tuple(int(a == i) for a in range(self.n_new)): _num(self.M[j][i])
                for i in range(self.n_new) if self.M[j][i] != 0}

    def _power(self, j, e):
        key = (j, e)
        if key not in self._pow:
            if e == 0:
                self._pow[key] = {(0,) * self.n_new: 1}
            else:
                self._pow[key] = poly_mul(self._power(j, e - 1), self._linear(j))
        return self._pow[key]

    def poly(self, exps) -> Dict[Tuple, object]:
        exps = tuple(exps)
        r = self._mono.get(exps)
        if r is None:
            r = {(0,) * self.n_new: 1}
            for j, e in enumerate(exps):
                if e:
                    r = poly_mul(r, self._power(j, e))
            self._mono[exps] = r
        return r

    def poly_elt(self, p: Dict[Tuple, object]) -> Dict[Tuple, object]:
        out = {}
        for e, c in p.items():
            vec_add(out, self.poly(e), c)
        return out

    def form_terms(self, terms: Dict[FormKey, object]) -> Dict[FormKey, object]:
        out: Dict[FormKey, object] = {}
        zero = (0,) * self.n_new
        for (e, I), c in terms.items():
            acc = {(k, ()): v for k, v in self.poly(e).items()}
            for j in I:
                one = {(zero, (i,)): _num(self.M[j][i]) for i in range(self.n_new) if self.M[j][i] != 0}
                acc = wedge_terms(acc, one)
                if not acc:
                    break
            vec_add(out, acc, c)
        return out

    def form(self, f: PolyForm) -> PolyForm:
        return PolyForm(self.n_new, self.form_terms(f.terms))


def _num(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


def poly_mul(p, q):
    out = {}
    for a, x in p.items():
        for b, y in q.items():
            k = tuple(i + j for i, j in zip(a, b))
            out[k] = out.get(k, 0) + x * y
    return {k: v for k, v in out.items() if v}


def group_form_action(group, g: int) -> LinearPullback:
    """g acts on forms by pullback along g^{-1}: X_i -> sum_j (g^{-1})_{ij} X_j."""
    from .groups import mat_inverse
    return LinearPullback(mat_inverse(group.matrix(g)))


# -- HKR ---------------------------------------------------------------------

def hkr_chi_tensor(n: int, t: Sequence[Tuple[int, ...]]) -> Dict[FormKey, object]:
    """chi(a_0 ⊗ ... ⊗ a_k) = a_0 da_1 ∧ ... ∧ da_k for monomials a_i."""
    acc = {(tuple(t[0]), ()): 1}
    for a in t[1:]:
        acc = wedge_terms(acc, differential_of_monomial(a))
        if not acc:
            break
    return acc


def hkr_chi(n: int, chain: Dict[Tuple, object]) -> PolyForm:
    out: Dict[FormKey, object] = {}
    for t, c in chain.items():
        vec_add(out, hkr_chi_tensor(n, t), c)
    return PolyForm(n, out)


def _var(n, i):
    return tuple(int(j == i) for j in range(n))


def hkr_E(f: PolyForm, decorate=None) -> Dict[Tuple, object]:
    """E_k(f dX_I) = (1/k!) sum_pi sign(pi) f ⊗ X_{i_pi(1)} ⊗ ... ⊗ X_{i_pi(k)}.

    ``decorate`` optionally maps position -> group index, producing crossed
    chains (a_0 γ, a_1 e, ...) for decorate = (γ, e).
    """
    out: Dict[Tuple, object] = {}
    n = f.n
    for (e, I), c in f.terms.items():
        k = len(I)
        weight = Fraction(c, factorial(k)) if k > 1 else c
        for perm in itertools.permutations(range(k)):
            sign, _ = sort_sign(perm)
            factors = [tuple(e)] + [_var(n, I[p]) for p in perm]
            if decorate is not None:
                g0, e0 = decorate
                key = ((factors[0], g0),) + tuple((a, e0) for a in factors[1:])
            else:
                key = tuple(factors)
            out[key] = out.get(key, 0) + sign * weight
    return {k: v for k, v in out.items() if v}


def chi_matrix(n: int, src: ChainSlice, k: int) -> SparseMatrix:
    """Matrix of chi from a (plain, polynomial) Hochschild slice to forms."""
    tgt = form_slice(n, k, src.weight)
    cols = []
    for t in src.basis:
        labs = [f[0] for f in t] if t and isinstance(t[0][0], tuple) else t
        col = {}
        for key, v in hkr_chi_tensor(n, labs).items():
            col[tgt.index[key]] = v
        cols.append(col)
    return SparseMatrix(len(tgt), len(src), cols)
