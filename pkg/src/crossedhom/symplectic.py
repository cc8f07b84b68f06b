"""Linear symplectic calculus on Q^{2n}.

Coordinates are z = (x_1..x_n, xi_1..xi_n), indices 0..2n-1.  The form
omega = sum_{a<b} Omega_ab dz_a ∧ dz_b; the default Omega is the block
matrix [[0, I], [-I, 0]], i.e. omega = sum dx_i ∧ dxi_i.

Conventions (certified by the relation and homotopy tests, see
``check_star_delta_relations`` and ``homotopy_identity_check``):

* Poisson tensor P = -Omega^{-1}, {f, g} = sum_ab P_ab d_a f d_b g, so
  with the default Omega, {x, xi} = 1.
* G(dz_a, dz_b) = P_ab and ∧^k G is the determinant pairing.
* delta is the local expression sum_i (-1)^{i-1} {f, z_{a_i}} dz_{I - a_i}
  (the second sum of the local formula vanishes on linear coordinates);
  it agrees with i(G)d - d i(G) for the contraction i(G) below.
* alpha = i(Xi) omega with Xi = sum xi_i d/dxi_i, giving alpha = -sum xi dx.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import factorial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import DegeneratePairing, NotSymplecticFixedSpace
from .forms import (FormKey, LinearPullback, PolyForm, d_matrix, exterior_d, form_basis,
                    form_slice, merge_sign, operator_matrix, wedge_terms)
from .groups import as_matrix, mat_inverse, mat_mul, mat_transpose, to_sparse
from .hochschild import ChainSlice
from .linalg import SparseMatrix, kernel_basis, rank, scalar_str

Poly = Dict[Tuple[int, ...], object]

CONVENTION = {
    "poisson_tensor": "P = -Omega^{-1}; {x_i, xi_i} = 1 for the standard form",
    "pairing": "G(dz_a, dz_b) = P_ab, wedge^k G = determinant pairing",
    "delta": "delta(f dz_I) = sum_i (-1)^(i-1) {f, z_{I_i}} dz_{I without I_i} = i(G)d - d i(G)",
    "star": "beta ∧ *alpha = wedge^k G(beta, alpha) v, v = omega^n / n!",
    "alpha": "alpha = i(Xi) omega = -sum xi_i dx_i",
}


def standard_omega(n: int):
    return tuple(tuple(Fraction(1 if (j == i + n) else -1 if (i == j + n) else 0) for j in range(2 * n))
                 for i in range(2 * n))


def _det(rows) -> Fraction:
    a = [list(map(Fraction, r)) for r in rows]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            if a[r][c]:
                f = a[r][c] / a[c][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


def poly_derivative(p: Poly, i: int) -> Poly:
    out = {}
    for e, c in p.items():
        if e[i]:
            m = list(e)
            m[i] -= 1
            m = tuple(m)
            out[m] = out.get(m, 0) + c * e[i]
    return {k: v for k, v in out.items() if v}


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out = {}
    for a, x in p.items():
        for b, y in q.items():
            k = tuple(i + j for i, j in zip(a, b))
            out[k] = out.get(k, 0) + x * y
    return {k: v for k, v in out.items() if v}


def _clean_num(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


class SymplecticSpace:
    """Q^{2n} with a constant symplectic form."""

    def __init__(self, n: int, omega=None):
        self.n = n
        self.dim = 2 * n
        om = standard_omega(n) if omega is None else as_matrix(omega)
        if len(om) != self.dim or any(len(r) != self.dim for r in om):
            raise ValueError(f"omega must be {self.dim}x{self.dim}")
        for i in range(self.dim):
            for j in range(self.dim):
                if om[i][j] != -om[j][i]:
                    raise ValueError("omega is not antisymmetric")
        try:
            inv = mat_inverse(om) if om else ()
        except ValueError:
            raise ValueError("omega is degenerate") from None
        self.omega = om
        self.P = tuple(tuple(-x for x in row) for row in inv)
        self._star_cache: Dict[Tuple[int, ...], Dict[Tuple[int, ...], object]] = {}
        self._ops: Dict[str, "SymplecticOperator"] = {}
        self.xi_indices = frozenset(range(n, 2 * n))
        self.volume = self._volume()

    @classmethod
    def from_poisson(cls, P, xi_indices=None) -> "SymplecticSpace":
        """The space whose Poisson tensor is the invertible antisymmetric P.

        ``xi_indices`` names the fiber coordinates used by the L_Xi grading.
        """
        P = as_matrix(P)
        if len(P) % 2:
            raise NotSymplecticFixedSpace("odd-dimensional Poisson tensor")
        if not P:
            return cls(0, ())
        try:
            inv = mat_inverse(P)
        except ValueError:
            raise NotSymplecticFixedSpace("Poisson tensor is degenerate") from None
        sp = cls(len(P) // 2, tuple(tuple(-x for x in r) for r in inv))
        if xi_indices is not None:
            sp.xi_indices = frozenset(xi_indices)
        return sp

    # -- basic objects --------------------------------------------------------
    def omega_form(self) -> PolyForm:
        zero = (0,) * self.dim
        terms = {}
        for a in range(self.dim):
            for b in range(a + 1, self.dim):
                if self.omega[a][b]:
                    terms[(zero, (a, b))] = self.omega[a][b]
        return PolyForm(self.dim, terms)

    def _volume(self) -> Fraction:
        """Coefficient of dz_0 ∧ ... ∧ dz_{2n-1} in omega^n / n!."""
        om = self.omega_form()
        acc = PolyForm(self.dim, {((0,) * self.dim, ()): 1})
        for _ in range(self.n):
            acc = acc.wedge(om)
        top = ((0,) * self.dim, tuple(range(self.dim)))
        return Fraction(acc.terms.get(top, 0), factorial(self.n))

    def volume_form(self) -> PolyForm:
        return PolyForm(self.dim, {((0,) * self.dim, tuple(range(self.dim))): _clean_num(self.volume)})

    def coordinate_names(self):
        return [f"x{i + 1}" for i in range(self.n)] + [f"xi{i + 1}" for i in range(self.n)]

    # -- Poisson bracket ------------------------------------------------------
    def bracket(self, f: Poly, g: Poly) -> Poly:
        out: Poly = {}
        dg = [poly_derivative(g, b) for b in range(self.dim)]
        for a in range(self.dim):
            fa = poly_derivative(f, a)
            if not fa:
                continue
            for b in range(self.dim):
                if self.P[a][b] and dg[b]:
                    for k, v in _poly_mul(fa, dg[b]).items():
                        out[k] = out.get(k, 0) + self.P[a][b] * v
        return {k: _clean_num(v) for k, v in out.items() if v}

    # -- operators on form term dictionaries -----------------------------------
    def delta_terms(self, terms: Dict[FormKey, object]) -> Dict[FormKey, object]:
        out: Dict[FormKey, object] = {}
        for (e, I), c in terms.items():
            for pos, a in enumerate(I):
                rest = I[:pos] + I[pos + 1:]
                sign = -1 if pos % 2 else 1
                # {f, z_a} = sum_b P_ba d_b f
                for b in range(self.dim):
                    if self.P[b][a] and e[b]:
                        m = list(e)
                        m[b] -= 1
                        key = (tuple(m), rest)
                        out[key] = out.get(key, 0) + sign * c * self.P[b][a] * e[b]
        return {k: _clean_num(v) for k, v in out.items() if v}

    def iG_terms(self, terms: Dict[FormKey, object]) -> Dict[FormKey, object]:
        """i(G)(f dz_{a_1}..dz_{a_k}) = sum_{i<j} (-1)^{i+j-1} P_{a_i a_j} f dz_(I minus a_i, a_j)."""
        out: Dict[FormKey, object] = {}
        for (e, I), c in terms.items():
            k = len(I)
            for i in range(k):
                for j in range(i + 1, k):
                    p = self.P[I[i]][I[j]]
                    if p:
                        rest = tuple(x for t, x in enumerate(I) if t not in (i, j))
                        sign = -1 if (i + j + 2 - 1) % 2 else 1  # 1-based positions i+1, j+1
                        key = (e, rest)
                        out[key] = out.get(key, 0) + sign * p * c
        return {k: _clean_num(v) for k, v in out.items() if v}

    def delta_via_contraction(self, terms):
        a = self.iG_terms(exterior_d(terms))
        b = exterior_d(self.iG_terms(terms))
        out = dict(a)
        for k, v in b.items():
            out[k] = out.get(k, 0) - v
        return {k: v for k, v in out.items() if v}

    def pairing(self, I: Sequence[int], J: Sequence[int]) -> Fraction:
        """∧^k G(dz_I, dz_J) = det [P_{I_s J_t}]."""
        if len(I) != len(J):
            return Fraction(0)
        if not I:
            return Fraction(1)
        return _det([[self.P[a][b] for b in J] for a in I])

    def star_constant(self, J: Tuple[int, ...]) -> Dict[Tuple[int, ...], object]:
        """*(dz_J) as {K: coeff}, solved from the defining identity against all dz_I."""
        r = self._star_cache.get(J)
        if r is not None:
            return r
        k = len(J)
        full = tuple(range(self.dim))
        out = {}
        # beta = dz_I pairs only with the K complementary to I, so the linear
        # system is diagonal in the monomial basis
        for I in itertools.combinations(full, k):
            K = tuple(x for x in full if x not in I)
            sign, _ = merge_sign(I, K)
            if sign == 0:
                raise DegeneratePairing(f"dz_{I} ∧ dz_{K} vanished")
            val = self.pairing(I, J) * self.volume
            if val:
                out[K] = _clean_num(val / sign)
        self._star_cache[J] = out
        return out

    def star_terms(self, terms):
        out: Dict[FormKey, object] = {}
        for (e, J), c in terms.items():
            for K, v in self.star_constant(J).items():
                key = (e, K)
                out[key] = out.get(key, 0) + c * v
        return {k: v for k, v in out.items() if v}

    def alpha(self) -> PolyForm:
        """alpha = i(Xi) omega for the fiber Euler field Xi = sum xi_i d/dxi_i."""
        terms = {}
        n, N = self.n, self.dim
        for a in range(N):
            for b in range(a + 1, N):
                w = self.omega[a][b]
                if not w:
                    continue
                # i(Xi)(dz_a ∧ dz_b) = Xi_a dz_b - Xi_b dz_a, Xi_c = z_c for c >= n
                for c, other, sgn in ((a, b, 1), (b, a, -1)):
                    if c >= n:
                        e = tuple(int(t == c) for t in range(N))
                        key = (e, (other,))
                        terms[key] = terms.get(key, 0) + sgn * w
        return PolyForm(N, {k: _clean_num(v) for k, v in terms.items() if v})

    def eps_alpha_terms(self, terms):
        return wedge_terms(self.alpha().terms, terms)

    def lie_xi_eigen(self, key: FormKey) -> int:
        e, I = key
        xs = self.xi_indices
        return sum(e[i] for i in xs) + sum(1 for a in I if a in xs)

    def lie_xi_terms(self, terms):
        return {k: v * self.lie_xi_eigen(k) for k, v in terms.items() if self.lie_xi_eigen(k)}

    # -- slice matrices -------------------------------------------------------
    def operator(self, name: str) -> "SymplecticOperator":
        if name not in self._ops:
            self._ops[name] = SymplecticOperator(self, name)
        return self._ops[name]

    def slice(self, k, w, l=None) -> ChainSlice:
        return forms_slice(self, k, w, l)

    def describe(self):
        return {"n": self.n, "omega": [[scalar_str(x) for x in r] for r in self.omega],
                "convention": CONVENTION}


def forms_slice(space: SymplecticSpace, k: int, w: int, l: Optional[int] = None) -> ChainSlice:
    """Monomial forms of degree k and weight w, optionally with L_Xi eigenvalue l."""
    basis = form_basis(space.dim, k, w)
    if l is not None:
        basis = [b for b in basis if space.lie_xi_eigen(b) == l]
    return ChainSlice(k, w, "forms", l, basis)


_TARGETS = {
    "d": lambda n, k, w: (k + 1, w),
    "delta": lambda n, k, w: (k - 1, w - 2),
    "star": lambda n, k, w: (2 * n - k, w + 2 * n - 2 * k),
    "eps_alpha": lambda n, k, w: (k + 1, w + 2),
    "lie_xi": lambda n, k, w: (k, w),
    "i_G": lambda n, k, w: (k - 2, w - 2),
}


class SymplecticOperator:
    """A named operator with one matrix per (k, w) slice of monomial forms."""

    def __init__(self, space: SymplecticSpace, name: str):
        if name not in _TARGETS:
            raise ValueError(f"unknown operator {name!r}")
        self.space = space
        self.name = name
        self._fn: Callable = {
            "d": exterior_d,
            "delta": space.delta_terms,
            "star": space.star_terms,
            "eps_alpha": space.eps_alpha_terms,
            "lie_xi": space.lie_xi_terms,
            "i_G": space.iG_terms,
        }[name]
        self._cache: Dict[Tuple[int, int], SparseMatrix] = {}

    def target(self, k, w):
        return _TARGETS[self.name](self.space.n, k, w)

    def __call__(self, f: PolyForm) -> PolyForm:
        return PolyForm(f.n, self._fn(f.terms))

    def matrix(self, k: int, w: int) -> SparseMatrix:
        key = (k, w)
        m = self._cache.get(key)
        if m is None:
            src = form_slice(self.space.dim, k, w)
            tgt = form_slice(self.space.dim, *self.target(k, w))
            m = operator_matrix(self._fn, src, tgt)
            self._cache[key] = m
        return m


def poisson_bracket(f: Poly, g: Poly, space: SymplecticSpace = None) -> Poly:
    if space is None:
        n = len(next(iter(f), None) or next(iter(g), ())) // 2
        space = SymplecticSpace(max(n, 1))
    return space.bracket(f, g)


def brylinski_delta(space: SymplecticSpace, k: int, w: int) -> SparseMatrix:
    return space.operator("delta").matrix(k, w)


def symplectic_star(space: SymplecticSpace, k: int, w: int) -> SparseMatrix:
    return space.operator("star").matrix(k, w)


def euler_and_alpha(space: SymplecticSpace):
    return space.alpha(), space.operator("lie_xi")


# -- relation reports --------------------------------------------------------

def _witness(diff: SparseMatrix):
    hit = diff.first_nonzero_column()
    if hit is None:
        return None
    j, col = hit
    return {"column": j, "difference": {str(i): scalar_str(v) for i, v in sorted(col.items())}}


def _entry(relation, n, k, w, lhs: SparseMatrix, rhs: SparseMatrix):
    if lhs.shape != rhs.shape:
        return {"relation": relation, "n": n, "k": k, "w": w, "pass": False,
                "witness": {"shape": [list(lhs.shape), list(rhs.shape)]}}
    diff = lhs - rhs
    ok = diff.is_zero()
    out = {"relation": relation, "n": n, "k": k, "w": w, "pass": ok}
    if not ok:
        out["witness"] = _witness(diff)
    return out


def _window(space, max_k, max_w):
    max_k = 2 * space.n if max_k is None else min(max_k, 2 * space.n)
    for k in range(max_k + 1):
        for w in range(k, max_w + 1):
            yield k, w


def check_star_delta_relations(space: SymplecticSpace, max_w: int, max_k: int = None) -> List[dict]:
    """**=id, delta = (-1)^{k+1} * d *, d delta + delta d = 0, delta^2 = 0 per slice."""
    n = space.n
    d, de, st = space.operator("d"), space.operator("delta"), space.operator("star")
    report = []
    for k, w in _window(space, max_k, max_w):
        dim = len(form_basis(space.dim, k, w))
        ident = SparseMatrix.identity(dim)
        k2, w2 = st.target(k, w)
        report.append(_entry("star_star", n, k, w, st.matrix(k2, w2) @ st.matrix(k, w), ident))
        # * d * : (k,w) -> (2n-k, w') -> (2n-k+1, w') -> (k-1, w-2)
        if k >= 1:
            sdst = st.matrix(k2 + 1, w2) @ d.matrix(k2, w2) @ st.matrix(k, w)
            sign = 1 if (k + 1) % 2 == 0 else -1
            report.append(_entry("delta_star_d_star", n, k, w, de.matrix(k, w), sdst.scale(sign)))
            report.append(_entry("delta_squared", n, k, w,
                                 de.matrix(k - 1, w - 2) @ de.matrix(k, w),
                                 SparseMatrix.zero(len(form_basis(space.dim, k - 2, w - 4)), dim)))
        anti = d.matrix(k - 1, w - 2) @ de.matrix(k, w) + de.matrix(k + 1, w) @ d.matrix(k, w)
        report.append(_entry("d_delta_anticommute", n, k, w, anti,
                             SparseMatrix.zero(len(form_basis(space.dim, k, w - 2)), dim)))
    return report


def homotopy_identity_check(space: SymplecticSpace, max_w: int, max_k: int = None) -> List[dict]:
    """delta eps(alpha) + eps(alpha) delta = L_Xi + n - k on k-forms."""
    n = space.n
    de, ea, lx = space.operator("delta"), space.operator("eps_alpha"), space.operator("lie_xi")
    report = []
    for k, w in _window(space, max_k, max_w):
        dim = len(form_basis(space.dim, k, w))
        lhs = de.matrix(k + 1, w + 2) @ ea.matrix(k, w)
        if k >= 1:
            lhs = lhs + ea.matrix(k - 1, w - 2) @ de.matrix(k, w)
        rhs = lx.matrix(k, w) + SparseMatrix.identity(dim).scale(n - k)
        report.append(_entry("homotopy_identity", n, k, w, lhs, rhs))
    return report


def _restricted(m: SparseMatrix, src: ChainSlice, tgt: ChainSlice, full_src, full_tgt):
    rows = [full_tgt.index[b] for b in tgt.basis]
    cols = [full_src.index[b] for b in src.basis]
    return m.submatrix(rows, cols)


def poisson_homology(space: SymplecticSpace, k: int, w: int, l: Optional[int] = None) -> int:
    """dim HK_k at weight w (and L_Xi eigenvalue l if given), from delta matrices."""
    de = space.operator("delta")
    sl = forms_slice(space, k, w, l)
    if not len(sl):
        return 0
    full = form_slice(space.dim, k, w)
    lo = forms_slice(space, k - 1, w - 2, None if l is None else l - 1)
    out_m = _restricted(de.matrix(k, w), sl, lo, full, form_slice(space.dim, k - 1, w - 2)) if len(lo) else None
    hi = forms_slice(space, k + 1, w + 2, None if l is None else l + 1)
    in_m = (_restricted(de.matrix(k + 1, w + 2), hi, sl, form_slice(space.dim, k + 1, w + 2), full)
            if len(hi) else None)
    r_out = rank(out_m) if out_m is not None else 0
    r_in = rank(in_m) if in_m is not None else 0
    return len(sl) - r_out - r_in


def de_rham_dim(space_dim: int, k: int, w: int) -> int:
    """Polynomial de Rham cohomology H^k at weight w."""
    dim = len(form_basis(space_dim, k, w))
    if not dim:
        return 0
    r_out = rank(d_matrix(space_dim, k, w)) if k < space_dim else 0
    r_in = rank(d_matrix(space_dim, k - 1, w)) if k >= 1 else 0
    return dim - r_out - r_in


def poisson_homology_report(space: SymplecticSpace, max_w: int) -> List[dict]:
    """HK versus de Rham in complementary degree, critical-line vanishing,
    and the star intertwining *delta = (-1)^{k+1} d * per slice."""
    n = space.n
    st, d, de = space.operator("star"), space.operator("d"), space.operator("delta")
    report = []
    for k, w in _window(space, None, max_w):
        hk = poisson_homology(space, k, w)
        k2, w2 = st.target(k, w)
        dr = de_rham_dim(space.dim, k2, w2)
        report.append({"relation": "hk_equals_de_rham", "n": n, "k": k, "w": w,
                       "hk": hk, "de_rham": dr, "pass": hk == dr})
        for l in range(0, w + 1):
            if l == k - n:
                continue
            v = poisson_homology(space, k, w, l)
            if len(forms_slice(space, k, w, l)):
                report.append({"relation": "hk_off_critical_line", "n": n, "k": k, "w": w, "l": l,
                               "hk": v, "pass": v == 0})
        if k >= 1:
            sign = 1 if (k + 1) % 2 == 0 else -1
            lhs = st.matrix(k - 1, w - 2) @ de.matrix(k, w)
            rhs = (d.matrix(k2, w2) @ st.matrix(k, w)).scale(sign)
            report.append(_entry("star_intertwines", n, k, w, lhs, rhs))
    return report


# -- equivariance -------------------------------------------------------------

def preserves_omega(space: SymplecticSpace, g) -> bool:
    g = as_matrix(g)
    return mat_mul(mat_mul(mat_transpose(g), space.omega), g) == space.omega


def group_pullback(g) -> LinearPullback:
    """g acts on functions and forms by pullback along g^{-1}."""
    return LinearPullback(mat_inverse(as_matrix(g)))


def equivariance_report(space: SymplecticSpace, group, max_w: int) -> List[dict]:
    report = []
    for gi in range(group.order):
        g = group.matrix(gi)
        pb = group_pullback(g)
        for name in ("star", "delta"):
            op = space.operator(name)
            for k, w in _window(space, None, max_w):
                k2, w2 = op.target(k, w)
                if k2 < 0 or w2 < k2:
                    continue
                src, tgt = form_slice(space.dim, k, w), form_slice(space.dim, k2, w2)
                a_src = operator_matrix(pb.form_terms, src, src)
                a_tgt = operator_matrix(pb.form_terms, tgt, tgt)
                e = _entry(f"{name}_commutes_with_group", space.n, k, w,
                           op.matrix(k, w) @ a_src, a_tgt @ op.matrix(k, w))
                e["element"] = gi
                report.append(e)
    return report


# -- symplectic extension ------------------------------------------------------

class SymplecticExtension:
    """Pullback along the symplectic-orthogonal projection V -> V^gamma.

    Coordinates y_1..y_m on V^gamma are taken w.r.t. the canonical (RREF)
    basis B of ker(gamma - 1); ``extend`` maps Q[y] -> Q[z] and
    ``restrict`` maps Q[z] -> Q[y] along z = B y.
    """

    def __init__(self, space: SymplecticSpace, gamma):
        self.space = space
        g = as_matrix(gamma)
        N = space.dim
        if len(g) != N:
            raise ValueError("gamma has the wrong size")
        if not preserves_omega(space, g):
            raise NotSymplecticFixedSpace("gamma does not preserve omega")
        self.gamma = g
        shifted = to_sparse(tuple(tuple(g[i][j] - (1 if i == j else 0) for j in range(N)) for i in range(N)))
        fixed = kernel_basis(shifted)
        self.m = fixed.dim
        self.B = tuple(tuple(Fraction(vec.get(i, 0)) for vec in fixed.basis) for i in range(N))  # N x m
        if self.m:
            M = mat_mul(mat_mul(mat_transpose(self.B), space.omega), self.B)
            try:
                Minv = mat_inverse(M)
            except ValueError:
                raise NotSymplecticFixedSpace("omega degenerates on the fixed space") from None
            self.omega_fixed = M
            self.P_fixed = tuple(tuple(-x for x in r) for r in Minv)
            self.R = mat_mul(mat_mul(Minv, mat_transpose(self.B)), space.omega)  # m x N
        else:
            self.omega_fixed = ()
            self.P_fixed = ()
            self.R = ()
        self._ext = LinearPullback(self.R) if self.m else None
        self._res = LinearPullback(self.B) if self.m else None

    def extend(self, f: Poly) -> Poly:
        N = self.space.dim
        if not self.m:
            return {(0,) * N: c for e, c in f.items() if not any(e)}
        return {k: _clean_num(v) for k, v in self._ext.poly_elt(f).items()}

    def restrict(self, f: Poly) -> Poly:
        if not self.m:
            c = f.get((0,) * self.space.dim, 0)
            return {(): c} if c else {}
        return {k: _clean_num(v) for k, v in self._res.poly_elt(f).items()}

    def bracket_fixed(self, f: Poly, g: Poly) -> Poly:
        out: Poly = {}
        for a in range(self.m):
            fa = poly_derivative(f, a)
            if not fa:
                continue
            for b in range(self.m):
                if self.P_fixed[a][b]:
                    for k, v in _poly_mul(fa, poly_derivative(g, b)).items():
                        out[k] = out.get(k, 0) + self.P_fixed[a][b] * v
        return {k: _clean_num(v) for k, v in out.items() if v}

    def check_brackets(self, max_w: int) -> List[dict]:
        from .algebras import exponent_vectors
        monos = [e for d in range(max_w + 1) for e in exponent_vectors(self.m, d)] if self.m else [()]
        bad = []
        checked = 0
        for e1 in monos:
            for e2 in monos:
                f, g = {e1: 1}, {e2: 1}
                lhs = self.restrict(self.space.bracket(self.extend(f), self.extend(g)))
                rhs = self.bracket_fixed(f, g) if self.m else {}
                checked += 1
                if lhs != rhs:
                    bad.append({"f": list(e1), "g": list(e2)})
        return [{"relation": "extension_bracket", "m": self.m, "pairs": checked,
                 "pass": not bad, **({"witness": bad[0]} if bad else {})}]

    def restricted_matrix(self, c):
        """c restricted to V^gamma in the basis B (c B = B c_gamma)."""
        c = as_matrix(c)
        cB = mat_mul(c, self.B)
        # B has an identity block at its pivot rows (RREF), read c_gamma off there
        pivots = [next(i for i in range(len(self.B)) if self.B[i][j] != 0 and
                       all(self.B[i][t] == 0 for t in range(self.m) if t != j)) for j in range(self.m)]
        cg = tuple(tuple(cB[pivots[i]][j] / self.B[pivots[i]][i] for j in range(self.m)) for i in range(self.m))
        if mat_mul(self.B, cg) != cB:
            raise ValueError("element does not preserve the fixed space")
        return cg

    def check_equivariance(self, group, max_w: int) -> List[dict]:
        """ext(c_gamma . f) = c . ext(f) for every c commuting with gamma."""
        from .algebras import exponent_vectors
        gi = group.index[self.gamma] if self.gamma in group.index else None
        members = [c for c in range(group.order)
                   if gi is None or group.mul(c, gi) == group.mul(gi, c)]
        out = []
        for c in members:
            cm = group.matrix(c)
            if self.m:
                cg = self.restricted_matrix(cm)
                act_fixed = LinearPullback(mat_inverse(cg))
            act = group_pullback(cm)
            monos = [e for d in range(max_w + 1) for e in exponent_vectors(self.m, d)] if self.m else [()]
            bad = None
            for e in monos:
                f = {e: 1}
                lhs = self.extend(act_fixed.poly_elt(f)) if self.m else self.extend(f)
                rhs = {k: _clean_num(v) for k, v in act.poly_elt(self.extend(f)).items() if v}
                lhs = {k: v for k, v in lhs.items() if v}
                if lhs != rhs:
                    bad = list(e)
                    break
            out.append({"relation": "extension_equivariant", "element": c, "pass": bad is None,
                        **({"witness": bad} if bad is not None else {})})
        return out


def symplectic_extension(space: SymplecticSpace, gamma) -> SymplecticExtension:
    return SymplecticExtension(space, gamma)


def verify_symplectic(max_n: int = 2, max_w: int = 5, groups=None) -> List[dict]:
    """Full battery for the `verify symplectic` report."""
    report = []
    for n in range(1, max_n + 1):
        sp = SymplecticSpace(n)
        report += check_star_delta_relations(sp, max_w)
        report += homotopy_identity_check(sp, max_w)
        report += poisson_homology_report(sp, max_w)
        agree = True
        for k, w in _window(sp, None, max_w):
            a = sp.operator("delta").matrix(k, w)
            src = form_slice(sp.dim, k, w)
            tgt = form_slice(sp.dim, k - 1, w - 2) if k >= 1 else form_slice(sp.dim, 0, w - 2)
            if k >= 1:
                b = operator_matrix(sp.delta_via_contraction, src, tgt)
                agree = agree and a == b
        report.append({"relation": "delta_local_equals_contraction", "n": n, "pass": agree})
    for n, g in (groups or []):
        sp = SymplecticSpace(n)
        report += equivariance_report(sp, g, min(max_w, 4))
    return report
