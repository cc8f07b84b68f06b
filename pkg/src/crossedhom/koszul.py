"""Koszul complexes, twisted homology through Koszul resolutions, fixed-point
form spaces and the averaged map chi^gamma."""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

from .algebras import Algebra, PolynomialAlgebra, exponent_vectors, polynomial_algebra
from .errors import NotCommutative, WrongComponent
from .forms import (LinearPullback, PolyForm, form_basis, form_slice, group_form_action, hkr_chi,
                    merge_sign, operator_matrix, poly_mul)
from .groups import FiniteMatrixGroup, average_projector, centralizer, fixed_decomposition, mat_inverse
from .hochschild import ChainSlice, HochschildModel, map_G_tensor, twisted_for_class
from .linalg import SparseMatrix, homology_dim, rank, vec_add


class KoszulComplex:
    """K(R : f_1..f_q) = R ⊗ Λ(v_1..v_q), δ(r v_I) = sum_m (-1)^m r f_{I_m} v_{I - I_m}.

    Basis of the (l, w) slice: (monomial, I) with |I| = l and
    deg(monomial) + sum of element weights over I = w.
    """

    def __init__(self, ring: Algebra, elements: Sequence[Dict], weights: Optional[Sequence[int]] = None):
        if not getattr(ring, "commutative", False):
            raise NotCommutative("Koszul complexes need a commutative ring")
        self.ring = ring
        self.elements = [dict(f) for f in elements]
        if weights is None:
            weights = []
            for f in self.elements:
                ws = {ring.weight(a) for a in f}
                if len(ws) > 1:
                    raise ValueError(f"element {f} is not homogeneous")
                weights.append(ws.pop() if ws else 1)
        self.weights = list(weights)
        self.q = len(self.elements)

    def basis(self, l: int, w: int):
        out = []
        if l < 0 or l > self.q:
            return out
        for I in itertools.combinations(range(self.q), l):
            rest = w - sum(self.weights[i] for i in I)
            if rest < 0:
                continue
            for m in self.ring.basis_of_weight(rest):
                out.append((m, I))
        return sorted(out, key=lambda t: (t[1], t[0]))

    def slice(self, l: int, w: int) -> ChainSlice:
        return ChainSlice(l, w, "koszul", None, self.basis(l, w))

    def delta_terms(self, key) -> Dict:
        m, I = key
        out = {}
        for pos, i in enumerate(I):
            sign = -1 if pos % 2 else 1
            rest = I[:pos] + I[pos + 1:]
            for a, c in self.elements[i].items():
                for p, x in self.ring.mul(m, a).items():
                    k2 = (p, rest)
                    out[k2] = out.get(k2, 0) + sign * c * x
        return {k: v for k, v in out.items() if v}

    def d_matrix(self, l: int, w: int) -> SparseMatrix:
        src, tgt = self.slice(l, w), self.slice(l - 1, w)
        cols = []
        for key in src.basis:
            cols.append({tgt.index[k2]: v for k2, v in self.delta_terms(key).items()})
        return SparseMatrix(len(tgt), len(src), cols)

    def homology(self, l: int, w: int) -> int:
        return homology_dim(self.d_matrix(l + 1, w), self.d_matrix(l, w))


def koszul_complex(ring: Algebra, elements, weights=None) -> KoszulComplex:
    return KoszulComplex(ring, elements, weights)


class TensorSplit:
    """Witness for K(R ⊗ R' : S ⊔ S') ≅ K(R:S) ⊗ K(R':S') on weight slices."""

    def __init__(self, k1: KoszulComplex, k2: KoszulComplex):
        for k in (k1, k2):
            if not isinstance(k.ring, PolynomialAlgebra):
                raise ValueError("tensor split is implemented for polynomial rings")
        self.k1, self.k2 = k1, k2
        n1, n2 = k1.ring.n, k2.ring.n
        ring = polynomial_algebra(n1 + n2)
        elems = [{a + (0,) * n2: c for a, c in f.items()} for f in k1.elements]
        elems += [{(0,) * n1 + a: c for a, c in f.items()} for f in k2.elements]
        self.product = KoszulComplex(ring, elems, k1.weights + k2.weights)

    def _pieces(self, l, w):
        out = []
        for l1 in range(l + 1):
            for w1 in range(w + 1):
                out.append((l1, w1, self.k1.basis(l1, w1), self.k2.basis(l - l1, w - w1)))
        return out

    def tensor_basis(self, l, w):
        return [(a, b) for (_, _, B1, B2) in self._pieces(l, w) for a in B1 for b in B2]

    def phi(self, a, b):
        (m1, I1), (m2, I2) = a, b
        return (m1 + m2, I1 + tuple(i + self.k1.q for i in I2))

    def tensor_delta(self, a, b) -> Dict:
        out = {}
        for k2, v in self.k1.delta_terms(a).items():
            out[(k2, b)] = out.get((k2, b), 0) + v
        sign = -1 if len(a[1]) % 2 else 1
        for k2, v in self.k2.delta_terms(b).items():
            out[(a, k2)] = out.get((a, k2), 0) + sign * v
        return out

    def check(self, l, w):
        """True when Φ is a bijection of bases intertwining the differentials."""
        src = self.tensor_basis(l, w)
        images = [self.phi(a, b) for a, b in src]
        if sorted(images) != sorted(self.product.basis(l, w)) or len(set(images)) != len(images):
            return False
        for a, b in src:
            lhs = {}
            for (x, y), v in self.tensor_delta(a, b).items():
                key = self.phi(x, y)
                lhs[key] = lhs.get(key, 0) + v
            rhs = self.product.delta_terms(self.phi(a, b))
            if {k: v for k, v in lhs.items() if v} != rhs:
                return False
        return True

    def kunneth(self, l, w):
        """(dim H_l of the product complex, sum of products of factor homology dims)."""
        left = self.product.homology(l, w)
        right = 0
        for l1 in range(l + 1):
            for w1 in range(w + 1):
                right += self.k1.homology(l1, w1) * self.k2.homology(l - l1, w - w1)
        return left, right


def koszul_tensor_split(k1: KoszulComplex, k2: KoszulComplex) -> TensorSplit:
    return TensorSplit(k1, k2)


# -- twisted homology through Koszul -------------------------------------


def _action_images(gamma_inv, n):
    """gamma(X_i) = sum_j (gamma^{-1})_{ij} X_j as polynomials."""
    out = []
    for i in range(n):
        out.append({tuple(int(a == j) for a in range(n)): _num(gamma_inv[i][j])
                    for j in range(n) if gamma_inv[i][j] != 0})
    return out


def _num(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


def twisted_koszul(n: int, gamma) -> KoszulComplex:
    """K(Q[V] : {X_i - gamma(X_i)})."""
    ring = polynomial_algebra(n)
    inv = mat_inverse(tuple(tuple(Fraction(x) for x in row) for row in gamma)) if n else ()
    elems = []
    for i, img in enumerate(_action_images(inv, n)):
        f = {tuple(int(a == i) for a in range(n)): 1}
        vec_add(f, img, -1)
        elems.append(f)
    return KoszulComplex(ring, elems, [1] * n)


def twisted_via_koszul(n: int, gamma, max_l: int, max_w: int) -> Dict[Tuple[int, int], int]:
    K = twisted_koszul(n, gamma)
    return {(l, w): K.homology(l, w) for l in range(max_l + 1) for w in range(max_w + 1)}


def fixed_forms_dim(m: int, l: int, w: int) -> int:
    """C(m, l) * dim Q[V^γ]_{w-l}, the dimension of forms on an m-dimensional space."""
    if l < 0 or l > m or w < l:
        return 0
    return comb(m, l) * comb(w - l + m - 1, m - 1) if m else (1 if w == 0 and l == 0 else 0)


def invariant_koszul_homology(group: FiniteMatrixGroup, gamma: int, l: int, w: int) -> int:
    """Γ_γ-invariant homology of K(Q[V] : {X_i - γ X_i}).

    g in Γ_γ acts by r v_I -> g(r) ∧_{i in I} (sum_j (g^{-1})_{ij} v_j); this is
    exactly the pullback action on forms with v_i in place of dX_i.
    """
    n = group.dim
    K = twisted_koszul(n, group.matrix(gamma))
    cent = sorted(centralizer(group, gamma))

    def proj(sl):
        return average_projector(group, cent, lambda g: operator_matrix(
            group_form_action(group, g).form_terms, sl, sl))

    mid, up = K.slice(l, w), K.slice(l + 1, w)
    if not mid.dim:
        return 0
    p_k, p_up = proj(mid), proj(up)
    d_out, d_in = K.d_matrix(l, w), K.d_matrix(l + 1, w)
    return rank(p_k) - rank(d_out @ p_k) - rank(d_in @ p_up)


# -- fixed-point forms ------------------------------------------------------


class FixedSpace:
    """V^γ with its echelon basis u_1..u_m, inclusion matrix and Γ_γ action."""

    def __init__(self, group: FiniteMatrixGroup, gamma: int):
        self.group = group
        self.gamma = gamma
        self.decomp = fixed_decomposition(group, gamma)
        n = group.dim
        self.n = n
        self.basis = [dict(v) for v in self.decomp.fixed.basis]
        self.m = len(self.basis)
        self.pivots = [min(v) for v in self.basis]
        # inclusion: X_j restricted = sum_i basis_i[j] Y_i
        self.inclusion = [[Fraction(self.basis[i].get(j, 0)) for i in range(self.m)] for j in range(n)]
        self.centralizer = sorted(centralizer(group, gamma))
        self.restrict = LinearPullback(self.inclusion) if self.m else None

    def restricted_matrix(self, g: int):
        """g|V^γ in the basis u: g u_i = sum_l M[l][i] u_l."""
        gm = self.group.matrix(g)
        M = [[Fraction(0)] * self.m for _ in range(self.m)]
        for i, u in enumerate(self.basis):
            img = [sum((gm[r][c] * u.get(c, 0) for c in range(self.n)), Fraction(0)) for r in range(self.n)]
            for l, p in enumerate(self.pivots):
                M[l][i] = img[p]
        return M

    def form_action(self, g: int) -> LinearPullback:
        inv = mat_inverse(tuple(tuple(r) for r in self.restricted_matrix(g))) if self.m else ()
        return LinearPullback(inv)

    def restrict_form(self, f: PolyForm) -> PolyForm:
        if self.m == 0:
            # restriction to the origin keeps only constant 0-forms
            t = {}
            for (e, I), c in f.terms.items():
                if not I and not any(e):
                    t[((), ())] = t.get(((), ()), 0) + c
            return PolyForm(0, t)
        return self.restrict.form(f)

    def invariant_projector(self, l: int, w: int) -> SparseMatrix:
        sl = form_slice(self.m, l, w)
        if self.m == 0:
            return SparseMatrix.identity(len(sl))
        return average_projector(self.group, self.centralizer, lambda g: operator_matrix(
            self.form_action(g).form_terms, sl, sl))

    def invariant_dim(self, l: int, w: int) -> int:
        sl = form_slice(self.m, l, w)
        if not sl.dim:
            return 0
        return rank(self.invariant_projector(l, w))

    def invariant_basis(self, l: int, w: int) -> List[PolyForm]:
        """Echelon basis of the invariant forms at (l, w), as PolyForms on V^γ."""
        from .linalg import column_space
        sl = form_slice(self.m, l, w)
        if not sl.dim:
            return []
        P = self.invariant_projector(l, w)
        return [PolyForm(self.m, {sl.basis[i]: c for i, c in v.items()}) for v in column_space(P).basis]


def invariant_forms(n: int, group: FiniteMatrixGroup, gamma: int, max_l: int, max_w: int):
    fs = FixedSpace(group, gamma)
    return {(l, w): fs.invariant_dim(l, w) for l in range(max_l + 1) for w in range(max_w + 1)}


# -- chi^gamma -----------------------------------------------------------------


class ChiGamma:
    """chi^γ = (restriction to V^γ) ∘ chi ∘ G on the <γ> component of Q[V] ⋊ Γ."""

    def __init__(self, model: HochschildModel, cls: int):
        self.model = model
        self.cls = cls
        self.gamma = model.classes[cls].representative
        self.tw = twisted_for_class(model, cls)
        self.fixed = FixedSpace(model.group, self.gamma)
        self.n = model.group.dim

    def twisted(self, chain: Dict) -> Dict:
        out = {}
        for t, c in chain.items():
            if self.model.conjugacy_project(t) != self.cls:
                raise WrongComponent(f"tensor {t} is not in the component of {self.gamma}")
            vec_add(out, map_G_tensor(self.model, self.tw, t), c)
        return out

    def __call__(self, chain: Dict) -> PolyForm:
        f = hkr_chi(self.n, self.twisted(chain))
        return self.fixed.restrict_form(f)

    def matrix(self, src: ChainSlice, k: int) -> SparseMatrix:
        tgt = form_slice(self.fixed.m, k, src.weight) if self.fixed.m else ChainSlice(
            k, src.weight, "forms", None, [((), ())] if (k == 0 and src.weight == 0) else [])
        cols = []
        for t in src.basis:
            f = self({t: 1})
            cols.append({tgt.index[key]: v for key, v in f.terms.items()})
        return SparseMatrix(len(tgt), len(src), cols)


def chi_gamma(model: HochschildModel, cls: int, chain: Dict) -> PolyForm:
    return ChiGamma(model, cls)(chain)
