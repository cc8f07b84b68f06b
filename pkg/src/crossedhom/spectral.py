"""Spectral sequence of the order filtration on Hochschild complexes.

E^1 is identified with forms on the fixed spaces through iota_k = chi_k / k!
(chi the unnormalized HKR map a_0 da_1 ... da_k).  With this normalization
d^1 = delta and chi-compatibility with B hold on the nose; with chi itself one
gets d^1 = delta / k on k-forms.

A filtered model is a crossed product A ⋊ Γ with A the Weyl algebra (Bernstein
filtration, levels = total degree of normal-ordered monomials).  The level of
a chain is the sum of the levels of its factors; b never raises it and the
drops are multiples of ``step`` (2 for Weyl).  Every page dimension is
obtained from ranks of level-truncated differentials:

    Z^r_p = {x in F_p : Dx in F_{p - r s}},   B^r_p = D(F_{p + (r-1) s}) ∩ F_p,
    dim E^r_p = dim Z^r_p - dim Z^{r-1}_{p-s} - [dim B^{r-1}_p - dim (B^{r-1}_p ∩ F_{p-s})],

and each rank only needs the levels in a window (lo, hi], because columns
below lo map below lo.  The symbol model only supports HH_0 (see
``symbol_trace_count``); its Laurent slices are infinite and truncations are
not subcomplexes.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .algebras import (LinearAction, PolynomialAlgebra, SymbolModel, WeylAlgebra, as_crossed,
                       associated_graded, crossed_product, weyl_algebra, symbol_model)
from .errors import E1MismatchError, SBIViolation, UnsupportedModel
from .forms import LinearPullback, PolyForm, form_slice, hkr_E, operator_matrix
from .groups import close_group, mat_inverse, trivial_group
from .hochschild import (ChainSlice, HochschildModel, TwistedModel, _drop_degenerate, _expand, matrix_of,
                         twisted_for_class)
from .koszul import ChiGamma, FixedSpace
from .linalg import SparseMatrix, column_space, kernel_basis, rank, rank_of_vectors, scalar_str, solve, vec_add
from .symplectic import SymplecticSpace, poisson_homology


class FiltrationError(AssertionError):
    """The differential raised the filtration level."""


@dataclass
class SpectralPage:
    r: object
    entries: Dict[Tuple[int, int, object], int] = field(default_factory=dict)
    d: Dict[tuple, SparseMatrix] = field(default_factory=dict)
    labels: Dict[tuple, list] = field(default_factory=dict)

    def nonzero(self):
        return {k: v for k, v in self.entries.items() if v}

    def to_json(self):
        rows = [{"p": p, "q": q, "class": c, "dim": v} for (p, q, c), v in sorted(
            self.entries.items(), key=lambda kv: (kv[0][0], kv[0][1], str(kv[0][2])))]
        out = {"r": self.r if isinstance(self.r, int) else str(self.r), "entries": rows}
        if self.labels:
            out["labels"] = [{"p": p, "q": q, "class": c, "forms": f}
                             for (p, q, c), f in sorted(self.labels.items(), key=lambda kv: (kv[0][0], kv[0][1], str(kv[0][2])))]
        return out


INFINITY = "inf"


class FilteredModel:
    """Hochschild complex of a filtered crossed product with its graded shadow."""

    def __init__(self, algebra, name: str = None):
        self.algebra = as_crossed(algebra)
        self.base = self.algebra.base
        self.group = self.algebra.group
        self.name = name or self.algebra.name
        if isinstance(self.base, SymbolModel):
            self.kind = "symbol"
        elif isinstance(self.base, WeylAlgebra):
            self.kind = "weyl"
        elif self.algebra.graded:
            self.kind = "graded"
        else:
            raise UnsupportedModel(f"no filtered model for {self.base.name}")
        self.model = HochschildModel(self.algebra)
        self.step = 2 if self.kind == "weyl" else 1
        self.min_level = self.base.min_weight
        self._ranks: Dict[tuple, int] = {}
        self._chi: Dict[int, ChiGamma] = {}
        self._fixed: Dict[int, tuple] = {}
        self._tw: Dict[int, TwistedModel] = {}
        self._tw_windows: Dict[tuple, tuple] = {}
        if self.kind == "weyl":
            self.n = self.base.n
            self.gr = HochschildModel(associated_graded(self.algebra))
            c = self.base.commutator_matrix()
            # leading symbol of [a, b] is the model bracket: {X_a, X_b} = [X_a, X_b]
            self.poisson = tuple(tuple(Fraction(x) for x in row) for row in c)
        else:
            self.gr = self.model if self.kind == "graded" else None

    def _need_pages(self):
        if self.kind == "symbol":
            raise UnsupportedModel("spectral pages are not computable for the Laurent symbol model; "
                                   "use symbol_trace_count for HH_0")

    @property
    def classes(self):
        return self.model.classes

    def class_label(self, cls):
        return self.model.class_label(cls)

    # -- level-window matrices ------------------------------------------------
    def _parts(self, kind, k):
        if k < 0:
            return []
        return [k] if kind == "hh" else [k - 2 * i for i in range(k // 2 + 1)]

    def _levels(self, lo, hi):
        return [lv for lv in range(max(lo + 1, self.min_level), hi + 1)]

    def _spaces(self, kind, k, lo, hi, cls, sec):
        lv = self._levels(lo, hi)
        return [self.model.space(d, lv, cls, sec) for d in self._parts(kind, k)] if lv else []

    def window_dim(self, kind, k, lo, hi, cls, sec, route="crossed") -> int:
        if route == "twisted":
            lo = max(lo, self.min_level - 1)
            return len(self._tw_invariant_window(kind, k, lo, hi, cls, sec)[1]) if hi > lo and k >= 0 else 0
        return sum(len(s) for s in self._spaces(kind, k, lo, hi, cls, sec))

    def window_matrix(self, kind, k, lo, hi, cls, sec) -> SparseMatrix:
        """pi_{>lo} D on Tot_k restricted to levels (lo, hi]."""
        src = self._spaces(kind, k, lo, hi, cls, sec)
        tgt = self._spaces(kind, k - 1, lo, hi, cls, sec)
        index = {}
        for s in tgt:
            for t in s.basis:
                index[t] = len(index)
        tgt_degrees = set(self._parts(kind, k - 1))
        model = self.model
        cols = []
        for s in src:
            ops = []
            if s.degree - 1 in tgt_degrees:
                ops.append(model.b_tensor)
            if kind == "hc" and s.degree + 1 in tgt_degrees:
                ops.append(model.B_tensor)
            for t in s.basis:
                col = {}
                for op in ops:
                    for key, c in op(t).items():
                        i = index.get(key)
                        if i is None:
                            lv = model.tensor_level(key)
                            if lv > hi:
                                raise FiltrationError(f"{t} at level <= {hi} maps to level {lv}")
                            if lv > lo:
                                raise AssertionError(f"image {key} missing from the target window")
                            continue
                        col[i] = col.get(i, 0) + c
                cols.append({i: v for i, v in col.items() if v})
        return SparseMatrix(len(index), len(cols), cols)

    def window_rank(self, kind, k, lo, hi, cls, sec, route="crossed") -> int:
        if route == "twisted":
            return self.tw_window_rank(kind, k, lo, hi, cls, sec)
        lo = max(lo, self.min_level - 1)
        if hi <= lo or k < 0:
            return 0
        key = (kind, k, lo, hi, cls, sec)
        r = self._ranks.get(key)
        if r is None:
            m = self.window_matrix(kind, k, lo, hi, cls, sec)
            r = rank(m) if m.ncols and m.nrows else 0
            self._ranks[key] = r
        return r

    def sectors(self, kind, k, hi, cls, route="crossed") -> List[tuple]:
        if route == "twisted":
            return self.tw_sectors(kind, k, hi, cls)
        out = set()
        for d in self._parts(kind, k):
            for lv in self._levels(self.min_level - 1, hi):
                out.update(self.model.sectors(d, lv, cls))
        return sorted(out)

    # -- page dimensions ------------------------------------------------------
    def sector_parity(self, kind, k, hi, cls, sec, route="crossed"):
        """Level residue mod step shared by every chain of the sector (None if empty)."""
        for d in range(max(k - 1, 0), k + 2):
            for dd in self._parts(kind, d):
                for lv in self._levels(self.min_level - 1, hi):
                    if route == "twisted":
                        n = len(self.twisted(cls).slice(dd, lv, sec))
                    else:
                        n = len(self.model.slice(dd, lv, cls, sec))
                    if n:
                        return lv % self.step
        return None

    def e_dim(self, k, p, r, cls, sec, depth: int = None, kind="hh", route="crossed") -> int:
        s, lo0 = self.step, self.min_level - 1
        if s > 1 and self.sector_parity(kind, k, p + s, cls, sec, route) not in (None, p % s):
            return 0
        if r == 0:
            return self.window_dim(kind, k, p - 1, p, cls, sec, route)
        if r == INFINITY:
            lo = lo0
            q = p + (depth if depth is not None else s)
        else:
            lo = max(p - r * s, lo0)
            q = p + (r - 1) * s
        z = self.window_dim(kind, k, lo, p, cls, sec, route) - self.window_rank(kind, k, lo, p, cls, sec, route)
        z_prev = 0
        if p - s > lo:
            z_prev = (self.window_dim(kind, k, lo, p - s, cls, sec, route)
                      - self.window_rank(kind, k, lo, p - s, cls, sec, route))
        bnd = self.window_rank(kind, k + 1, p - s, q, cls, sec, route) - self.window_rank(kind, k + 1, p, q, cls, sec, route)
        return z - z_prev - bnd

    def page(self, r, max_level: int, max_degree: int, depth: int = None, classes=None) -> SpectralPage:
        self._need_pages()
        pg = SpectralPage(r)
        for cls in (range(len(self.classes)) if classes is None else classes):
            for k in range(max_degree + 1):
                for p in range(self.min_level, max_level + 1):
                    tot = 0
                    for sec in self.sectors("hh", k, p, cls):
                        tot += self.e_dim(k, p, r, cls, sec, depth)
                    pg.entries[(p, k - p, self.class_label(cls))] = tot
        return pg

    # -- E^0 ------------------------------------------------------------------
    def e0_page(self, max_level, max_degree) -> SpectralPage:
        return self.page(0, max_level, max_degree)

    def poly_model(self) -> HochschildModel:
        """polynomial_algebra(2n) ⋊ Γ with the same matrices, built independently of Gr."""
        if self.kind != "weyl":
            return self.model
        if not hasattr(self, "_poly"):
            poly = PolynomialAlgebra(2 * self.n)
            act = LinearAction(self.group, poly)
            self._poly = HochschildModel(crossed_product(poly, act))
        return self._poly

    def e0_check(self, max_level, max_degree) -> List[dict]:
        """E^0 differential = b of Gr = b of polynomial_algebra(2n) ⋊ Γ, per slice."""
        self._need_pages()
        out = []
        poly = self.poly_model()
        for cls in range(len(self.classes)):
            for k in range(1, max_degree + 1):
                for p in range(self.min_level, max_level + 1):
                    src = self.model.slice(k, p, cls)
                    tgt = self.model.slice(k - 1, p, cls)
                    top = _project_matrix(self.model, src, tgt)
                    ok_gr = True
                    if self.gr is not self.model:
                        ok_gr = top == self.gr.b_matrix(self.gr.slice(k, p, cls), self.gr.slice(k - 1, p, cls))
                    ps, pt = poly.slice(k, p, cls), poly.slice(k - 1, p, cls)
                    pm = poly.b_matrix(ps, pt)
                    ok_poly = _keyed(top, src, tgt) == _keyed(pm, ps, pt)
                    out.append({"check": "e0_equals_gr", "k": k, "p": p, "class": self.class_label(cls),
                                "dim": len(src), "pass": ok_gr and ok_poly})
        return out

    # -- fixed spaces, forms -------------------------------------------------
    def fixed(self, cls):
        """(FixedSpace, projection rows R, model Poisson space on V^gamma or None)."""
        r = self._fixed.get(cls)
        if r is None:
            gamma = self.classes[cls].representative
            fs = FixedSpace(self.group, gamma)
            N = self.group.dim
            comp = [dict(v) for v in fs.decomp.complement.basis]
            cols = fs.basis + comp
            M = tuple(tuple(Fraction(cols[j].get(i, 0)) for j in range(N)) for i in range(N))
            inv = mat_inverse(M)
            R = tuple(inv[i] for i in range(fs.m))          # coordinates along (1 - gamma)V
            sp = None
            if fs.m and self.kind == "weyl":
                P = self.poisson
                Pg = tuple(tuple(sum((R[i][a] * P[a][b] * R[j][b] for a in range(N) for b in range(N)),
                                     Fraction(0)) for j in range(fs.m)) for i in range(fs.m))
                xi = [i for i, piv in enumerate(fs.pivots) if piv >= self.n]
                sp = SymplecticSpace.from_poisson(Pg, xi_indices=xi)
            r = (fs, R, sp)
            self._fixed[cls] = r
        return r

    def chi(self, cls) -> ChiGamma:
        if cls not in self._chi:
            self._chi[cls] = ChiGamma(self.gr, cls)
        return self._chi[cls]

    def e1_check(self, max_level, max_degree, raise_on_mismatch=True) -> Tuple[SpectralPage, List[dict]]:
        """E^1 from ranks, Gr homology (E^0 homology) and invariant forms, all compared."""
        self._need_pages()
        pg = SpectralPage(1)
        report = []
        for cls in range(len(self.classes)):
            fs, _, _ = self.fixed(cls)
            for k in range(max_degree + 1):
                for p in range(self.min_level, max_level + 1):
                    by_rank = sum(self.e_dim(k, p, 1, cls, sec) for sec in self.sectors("hh", k, p, cls))
                    by_gr = self.gr.hh(k, p, cls)
                    forms = fs.invariant_dim(k, p) if (fs.m or (k == 0 and p == 0)) else 0
                    label = self.class_label(cls)
                    pg.entries[(p, k - p, label)] = by_rank
                    if forms:
                        pg.labels[(p, k - p, label)] = [f.to_json() for f in _inv_basis(fs, k, p)]
                    ok = by_rank == by_gr == forms
                    report.append({"check": "e1_equals_invariant_forms", "k": k, "p": p, "class": label,
                                   "rank_formula": by_rank, "gr_homology": by_gr, "forms": forms, "pass": ok})
                    if not ok and raise_on_mismatch:
                        raise E1MismatchError(f"E1 mismatch at class {label}, k={k}, p={p}: "
                                              f"ranks {by_rank}, Gr {by_gr}, forms {forms}")
        return pg, report

    def e1_page(self, max_level, max_degree) -> SpectralPage:
        return self.e1_check(max_level, max_degree)[0]

    # -- zig-zag ------------------------------------------------------------
    def lift(self, cls, omega: PolyForm, average: bool = True) -> Dict:
        """Normal-ordered lift of E^gamma(pi^* omega), averaged over the centralizer."""
        fs, R, _ = self.fixed(cls)
        gamma = self.classes[cls].representative
        e = self.group.identity_index
        N = self.group.dim
        if fs.m == 0:
            c = omega.terms.get(((), ()), 0)
            chain = {(((0,) * N, gamma),): c} if c else {}
        else:
            f = LinearPullback(R).form(omega)
            chain = hkr_E(f, decorate=(gamma, e))
        if not average or self.group.is_trivial():
            return chain
        return self._average(chain, self.classes[cls].centralizer)

    def _average(self, chain, members):
        G = self.group
        act = self.algebra.action.act
        out: Dict = {}
        wt = Fraction(1, len(members))
        for c in sorted(members):
            for t, v in chain.items():
                factors = [{(b, G.conj(c, g)): x for b, x in act(c, a).items()} for a, g in t]
                vec_add(out, _drop_degenerate(_expand(factors), self.algebra.unit), v * wt)
        return out

    def _split(self, chain) -> Dict[int, Dict]:
        out = defaultdict(dict)
        for t, c in chain.items():
            if c:
                out[self.model.tensor_level(t)][t] = c
        return dict(out)

    def d1_image(self, cls, omega: PolyForm, k: int, p: int, average=True) -> PolyForm:
        """d^1 of omega under the identification iota_k = chi_k / k! of E^1 with forms.

        The lift is of E(omega) = iota_k^{-1}(omega) / k!, so the level p-2 part
        c1 gives d^1(omega) = iota_{k-1}(k! c1) = k chi(c1).
        """
        L = self.lift(cls, omega, average)
        parts = self._split(self.model.b_chain(L))
        if any(lv > p for lv in parts):
            raise FiltrationError("b raised the level of a lift")
        if parts.get(p):
            raise E1MismatchError(f"lift of {omega} is not an E0 cycle")
        return self.chi(cls)(parts.get(p - 2, {})).scale(k)

    def delta_model(self, cls, omega: PolyForm) -> PolyForm:
        _, _, sp = self.fixed(cls)
        if sp is None:
            return PolyForm(omega.n)
        return PolyForm(omega.n, sp.delta_terms(omega.terms))

    def d1_matrix(self, cls, k, p, average=True, full=False):
        """d^1 in form coordinates: columns = invariant basis (or all monomial forms)."""
        fs, _, _ = self.fixed(cls)
        basis = _full_basis(fs, k, p) if full else _inv_basis(fs, k, p)
        tgt = _form_target(fs, k - 1, p - 2)
        cols = [tgt.vector(self.d1_image(cls, w, k, p, average).terms) for w in basis]
        return SparseMatrix(len(tgt), len(cols), cols), basis, tgt

    def verify_d1_equals_delta(self, max_level, max_degree) -> List[dict]:
        self._need_pages()
        out = []
        for cls in range(len(self.classes)):
            fs, _, _ = self.fixed(cls)
            for k in range(max_degree + 1):
                for p in range(self.min_level, max_level + 1):
                    basis = _inv_basis(fs, k, p)
                    if not basis:
                        continue
                    bad = None
                    for w in basis:
                        lhs = self.d1_image(cls, w, k, p) if k >= 1 else PolyForm(w.n)
                        rhs = self.delta_model(cls, w) if k >= 1 else PolyForm(w.n)
                        if lhs != rhs:
                            bad = {"form": w.to_json(), "d1": lhs.to_json(), "delta": rhs.to_json()}
                            break
                    entry = {"check": "d1_equals_delta", "k": k, "p": p, "class": self.class_label(cls),
                             "forms": len(basis), "pass": bad is None}
                    if bad:
                        entry["witness"] = bad
                    out.append(entry)
        return out

    def d1_commutes(self, cls, k, p) -> dict:
        """The un-averaged zig-zag on all forms commutes with the centralizer action."""
        fs, _, _ = self.fixed(cls)
        D, src_basis, tgt = self.d1_matrix(cls, k, p, average=False, full=True)
        src = _form_target(fs, k, p)
        ok = True
        if fs.m:
            for c in fs.centralizer:
                pb = fs.form_action(c)
                A = operator_matrix(pb.form_terms, src, src)
                B = operator_matrix(pb.form_terms, tgt, tgt) if len(tgt) else SparseMatrix(0, 0)
                if len(tgt) and B @ D != D @ A:
                    ok = False
        return {"check": "d1_commutes_with_group", "k": k, "p": p, "class": self.class_label(cls), "pass": ok}

    # -- E^2 and d^2 ------------------------------------------------------------
    def e2_from_d1(self, cls, k, p) -> int:
        """Homology of (E^1, d^1) computed from the zig-zag matrices."""
        fs, _, _ = self.fixed(cls)
        dim = len(_inv_basis(fs, k, p))
        if not dim:
            return 0
        out = rank(self.d1_matrix(cls, k, p)[0]) if k >= 1 and len(_form_target(fs, k - 1, p - 2)) else 0
        up_basis = _inv_basis(fs, k + 1, p + 2)
        inc = 0
        if up_basis:
            D, _, tgt = self.d1_matrix(cls, k + 1, p + 2)
            inc = rank(D)
        return dim - out - inc

    def e2_report(self, max_level, max_degree) -> Tuple[SpectralPage, List[dict]]:
        """E^2 by ranks, versus (E^1, d^1) homology, plus critical-line localization."""
        self._need_pages()
        pg = SpectralPage(2)
        rep = []
        for cls in range(len(self.classes)):
            fs, _, sp = self.fixed(cls)
            half = fs.m // 2
            for k in range(max_degree + 1):
                for p in range(self.min_level, max_level + 1):
                    brute = sum(self.e_dim(k, p, 2, cls, sec) for sec in self.sectors("hh", k, p, cls))
                    label = self.class_label(cls)
                    pg.entries[(p, k - p, label)] = brute
                    via = self.e2_from_d1(cls, k, p)
                    rep.append({"check": "e2_equals_d1_homology", "k": k, "p": p, "class": label,
                                "rank_formula": brute, "d1_homology": via, "pass": brute == via})
                    if sp is not None and len(sp.xi_indices) == half:
                        crit = k - half
                        off = 0
                        on = 0
                        for l in range(0, p + 1):
                            v = poisson_homology(sp, k, p, l)
                            if l == crit:
                                on = v
                            else:
                                off += v
                        ok = off == 0 and (brute == 0 or on >= brute)
                        rep.append({"check": "e2_critical_line", "k": k, "p": p, "class": label,
                                    "critical_l": crit, "on_line": on, "off_line": off, "pass": ok})
                    elif fs.m == 0:
                        ok = brute == (1 if (k == 0 and p == 0) else 0)
                        rep.append({"check": "e2_critical_line", "k": k, "p": p, "class": label,
                                    "critical_l": 0, "on_line": brute, "off_line": 0, "pass": ok})
        return pg, rep

    def d2_check(self, max_level, max_degree) -> List[dict]:
        """Zig-zag d^2 on every delta-cycle: correct by z with b_Gr z = c1, then the
        level p-4 part must be delta-exact (d^2 = 0 on E^2)."""
        self._need_pages()
        out = []
        for cls in range(len(self.classes)):
            fs, _, sp = self.fixed(cls)
            for k in range(1, max_degree + 1):
                for p in range(self.min_level, max_level + 1):
                    basis = _inv_basis(fs, k, p)
                    if not basis:
                        continue
                    src = _form_target(fs, k, p)
                    label = self.class_label(cls)
                    # delta-cycles among the invariant forms
                    vecs = [src.vector(w.terms) for w in basis]
                    M = SparseMatrix(len(src), len(vecs), vecs)
                    Dd, _, _ = self.d1_matrix(cls, k, p)
                    ker = kernel_basis(Dd) if Dd.nrows else None
                    combos = ker.basis if ker is not None else [{i: 1} for i in range(len(basis))]
                    bad = None
                    for cv in combos:
                        vec = M.apply(cv)
                        omega = PolyForm(fs.m, src.chain(vec))
                        res = self._d2_image(cls, omega, k, p)
                        if res is not True:
                            bad = {"form": omega.to_json(), "reason": res}
                            break
                    entry = {"check": "d2_zero", "k": k, "p": p, "class": label, "cycles": len(combos),
                             "pass": bad is None}
                    if bad:
                        entry["witness"] = bad
                    out.append(entry)
        return out

    def _d2_image(self, cls, omega, k, p):
        L0 = self.lift(cls, omega)
        parts = self._split(self.model.b_chain(L0))
        if parts.get(p):
            return "lift is not an E0 cycle"
        c1 = parts.get(p - 2, {})
        z = self._solve_gr(cls, c1, k, p - 2)
        if z is None:
            return "c1 is not a Gr boundary (d1 image nonzero)"
        L1 = dict(L0)
        vec_add(L1, z, -1)
        parts = self._split(self.model.b_chain(L1))
        if parts.get(p) or parts.get(p - 2):
            return "corrected lift still has terms at levels p or p-2"
        c2 = parts.get(p - 4, {})
        if not c2:
            return True
        eta = self.chi(cls)(c2)
        if not eta:
            return True
        _, _, sp = self.fixed(cls)
        fs = self.fixed(cls)[0]
        if sp is not None and sp.delta_terms(eta.terms):
            return "d2 image is not delta-closed"
        # exactness: eta in delta(invariant forms at (k, p-2))
        D, _, tgt = self.d1_matrix(cls, k, p - 2)
        if solve(D, tgt.vector(eta.terms)) is None:
            return "d2 image is a nonzero E2 class"
        return True

    def _solve_gr(self, cls, chain, k, level):
        """z with b_Gr z = chain at (k, level), solved sector by sector."""
        if not chain:
            return {}
        by_sec = defaultdict(dict)
        base = self.gr.base
        for t, c in chain.items():
            s = base.zero_sector()
            for a, _ in t:
                s = base.add_sectors(s, base.sector(a))
            by_sec[s][t] = c
        z = {}
        for sec, part in by_sec.items():
            src = self.gr.slice(k, level, cls, sec)
            tgt = self.gr.slice(k - 1, level, cls, sec)
            m = self.gr.b_matrix(src, tgt)
            sol = solve(m, tgt.vector(part))
            if sol is None:
                return None
            vec_add(z, src.chain(sol))
        return z

    # -- filtered homology ----------------------------------------------------
    def filtered_value(self, kind, k, w, j, cls, sec, route="crossed") -> int:
        lo0 = self.min_level - 1
        cyc = self.window_dim(kind, k, lo0, w, cls, sec, route) - self.window_rank(kind, k, lo0, w, cls, sec, route)
        q = w + j
        bnd = (self.window_rank(kind, k + 1, lo0, q, cls, sec, route)
               - self.window_rank(kind, k + 1, w, q, cls, sec, route))
        return cyc - bnd

    # -- twisted route --------------------------------------------------------
    # The class-<γ> summand of the crossed complex is quasi-isomorphic (F, G)
    # to the Γ_γ-invariant part of (C(A)_γ, b_γ), which carries no group
    # decorations and is |Γ|^k times smaller.  On invariants the twisted
    # cyclic operator has order n + 1, so (b_γ, B_γ) is a mixed complex and
    # the same windows give HC.
    def twisted(self, cls) -> TwistedModel:
        tw = self._tw.get(cls)
        if tw is None:
            tw = twisted_for_class(self.model, cls)
            self._tw[cls] = tw
        return tw

    def _tw_chains(self, kind, k, lo, hi, cls, sec):
        tw = self.twisted(cls)
        out = []
        for d in self._parts(kind, k):
            for lv in self._levels(lo, hi):
                out.extend(tw.slice(d, lv, sec).basis)
        return out

    def _tw_invariant_window(self, kind, k, lo, hi, cls, sec):
        """(index of window chains, basis of Γ_γ-invariant vectors of F_hi / F_lo)."""
        key = (kind, k, lo, hi, cls, sec)
        hit = self._tw_windows.get(key)
        if hit is not None:
            return hit
        tw = self.twisted(cls)
        index = {t: i for i, t in enumerate(self._tw_chains(kind, k, lo, hi, cls, sec))}
        if len(tw.centralizer) == 1:
            basis = [{i: 1} for i in range(len(index))]
        else:
            # the action is only filtered (normal ordering), so project on F_hi / F_lo
            chains = sorted(index, key=index.get)
            total = None
            for g in tw.centralizer:
                cols = []
                for t in chains:
                    col = {}
                    for key2, v in tw.act_tensor(g, t).items():
                        i = index.get(key2)
                        if i is None:
                            lv = sum(self.base.weight(a) for a in key2)
                            if lv > lo:
                                raise FiltrationError(f"Γ_γ maps {t} outside the window ({lo}, {hi}]")
                            continue
                        col[i] = col.get(i, 0) + v
                    cols.append(col)
                m = SparseMatrix(len(index), len(index), cols)
                total = m if total is None else total + m
            basis = column_space(total).basis if index else []
        self._tw_windows[key] = (index, basis)
        return index, basis

    def tw_window_rank(self, kind, k, lo, hi, cls, sec) -> int:
        lo = max(lo, self.min_level - 1)
        if hi <= lo or k <= 0:
            return 0
        key = ("tw", kind, k, lo, hi, cls, sec)
        r = self._ranks.get(key)
        if r is not None:
            return r
        tw = self.twisted(cls)
        src_index, basis = self._tw_invariant_window(kind, k, lo, hi, cls, sec)
        tgt_index = {t: i for i, t in enumerate(self._tw_chains(kind, k - 1, lo, hi, cls, sec))}
        tgt_degrees = set(self._parts(kind, k - 1))
        chains = {i: t for t, i in src_index.items()}
        images = {}
        vecs = []
        for vec in basis:
            col = {}
            for i, c in vec.items():
                im = images.get(i)
                if im is None:
                    t = chains[i]
                    raw = {}
                    if len(t) - 2 in tgt_degrees:
                        vec_add(raw, tw.bh_tensor(t))
                    if kind == "hc" and len(t) in tgt_degrees:
                        vec_add(raw, tw.Bh_tensor(t))
                    im = {}
                    for key2, v in raw.items():
                        j = tgt_index.get(key2)
                        if j is None:
                            lv = sum(self.base.weight(a) for a in key2)
                            if lv > hi:
                                raise FiltrationError(f"{t} at level <= {hi} maps to level {lv}")
                            continue
                        im[j] = im.get(j, 0) + v
                    images[i] = im
                vec_add(col, im, c)
            vecs.append(col)
        r = rank_of_vectors(vecs) if vecs else 0
        self._ranks[key] = r
        return r

    def tw_sectors(self, kind, k, w, cls) -> List[tuple]:
        if not self._tw_sector_safe(cls):
            return [None]
        tw = self.twisted(cls)
        out = set()
        for d in self._parts(kind, k):
            for lv in self._levels(self.min_level - 1, w):
                out.update(tw.sectors(d, lv))
        return sorted(out)

    def _tw_sector_safe(self, cls) -> bool:
        """True when the centralizer maps each sector to itself (so per-sector projection is valid)."""
        tw = self.twisted(cls)
        base = self.base
        for g in tw.centralizer:
            for lv in range(self.min_level, 3):
                for a in base.basis_of_weight(lv):
                    s = base.sector(a)
                    if any(base.sector(b) != s for b in tw.action.act(g, a)):
                        return False
        return True

    def _stabilize(self, kind, k, w, cls, depth, route="crossed"):
        """Value at the first depth j (multiple of step) agreeing with j + step.

        ``depth`` caps the search; the default cap is w + k + 2."""
        s = self.step
        cap = depth if depth is not None else w + k + 2
        secs = self.sectors(kind, k, w, cls, route)

        def val(j):
            return sum(self.filtered_value(kind, k, w, j, cls, sec, route) for sec in secs)

        history = []
        j = s
        prev = val(j)
        history.append((j, prev))
        while True:
            nxt = val(j + s)
            history.append((j + s, nxt))
            if nxt == prev:
                return prev, True, j, history
            if j + s >= cap:
                return nxt, False, j + s, history
            j += s
            prev = nxt

    def hh_filtered(self, k, w, depth=None, cls=None, kind="hh", route=None) -> dict:
        """dim F_w HH_k (image of H_k(F_w) at depth j), per class with stabilization flags.

        ``route`` is "twisted" (default) or "crossed" (the brute-force bar complex of A ⋊ Γ)."""
        if route is None:
            route = "twisted"
        if self.kind == "symbol":
            raise UnsupportedModel("only HH_0 is available for the symbol model")
        if k < 0:
            return {"value": 0, "stabilized": True, "per_class": {}}
        per = {}
        total, stable = 0, True
        for c in (range(len(self.classes)) if cls is None else [cls]):
            if self.kind == "graded":
                v = self.model.hh(k, w, c) if kind == "hh" else self.model.hc(k, w, c)
                per[self.class_label(c)] = {"value": v, "stabilized": True, "depth": 0}
                total += v
                continue
            v, ok, j, hist = self._stabilize(kind, k, w, c, depth, route)
            per[self.class_label(c)] = {"value": v, "stabilized": ok, "depth": j, "route": route,
                                        "history": [list(h) for h in hist]}
            total += v
            stable = stable and ok
        return {"value": total, "stabilized": stable, "per_class": per}

    def hc_filtered(self, k, w, depth=None, cls=None, route=None) -> dict:
        return self.hh_filtered(k, w, depth, cls, kind="hc", route=route)

    def abutment_check(self, k, w, cls, route="crossed") -> dict:
        """sum_{p <= w} dim E^inf_p = hh_filtered at the stabilized depth.

        E^inf is taken from ``route``; hh_filtered always uses the twisted route,
        so with the default the two sides come from different complexes."""
        res = self.hh_filtered(k, w, cls=cls)
        info = res["per_class"][self.class_label(cls)]
        j = info["depth"]
        einf = 0
        for p in range(self.min_level, w + 1):
            for sec in self.sectors("hh", k, p, cls, route):
                einf += self.e_dim(k, p, INFINITY, cls, sec, depth=j + (w - p), route=route)
        return {"check": "abutment", "k": k, "w": w, "class": self.class_label(cls), "route": route, "einf_sum": einf,
                "hh_filtered": info["value"], "stabilized": info["stabilized"], "depth": j,
                "pass": einf == info["value"] and info["stabilized"]}

    def page_consistency(self, max_level, max_degree) -> List[dict]:
        """E^3 (ranks) equals E^2 since d^2 = 0 and the pages stop changing."""
        out = []
        for cls in range(len(self.classes)):
            for k in range(max_degree + 1):
                for p in range(self.min_level, max_level + 1):
                    secs = self.sectors("hh", k, p, cls)
                    e2 = sum(self.e_dim(k, p, 2, cls, s) for s in secs)
                    e3 = sum(self.e_dim(k, p, 3, cls, s) for s in secs)
                    out.append({"check": "e3_equals_e2", "k": k, "p": p, "class": self.class_label(cls),
                                "e2": e2, "e3": e3, "pass": e2 == e3})
        return out

    def hc_and_hp(self, k, w, max_degree=None, max_shift=2, strict=False) -> dict:
        """HC from the (b, B) total complex versus sum_j HH_{k-2j}; HP from HC_{k+2m}."""
        hc = self.hc_filtered(k, w)
        hhs = [self.hh_filtered(k - 2 * j, w) for j in range(k // 2 + 1)]
        rhs = sum(h["value"] for h in hhs)
        sbi = hc["value"] == rhs
        out = {"k": k, "w": w, "hc": hc["value"], "sum_hh": rhs, "sbi_pass": sbi,
               "stabilized": hc["stabilized"] and all(h["stabilized"] for h in hhs)}
        hp_vals = [self.hc_filtered(k + 2 * m, w)["value"] for m in range(max_shift + 1)]
        out["hp_values"] = hp_vals
        out["hp"] = hp_vals[-1]
        out["hp_stable"] = len(hp_vals) > 1 and hp_vals[-1] == hp_vals[-2]
        top = max_degree if max_degree is not None else k + 2 * max_shift
        par = sum(self.hh_filtered(d, w)["value"] for d in range(k % 2, top + 1, 2))
        out["parity_sum_hh"] = par
        out["hp_pass"] = out["hp"] == par
        if strict and not sbi:
            raise SBIViolation(f"HC_{k} = {hc['value']} but sum HH_(k-2j) = {rhs} at w={w}")
        return out

    def trace_count(self, w: int, depth=None) -> dict:
        """dim HH_0 per class (traces are the dual of HH_0)."""
        if self.kind == "symbol":
            return symbol_trace_count(self.base)
        res = self.hh_filtered(0, w, depth)
        return {"w": w, "per_class": {c: v["value"] for c, v in res["per_class"].items()},
                "total": res["value"], "stabilized": res["stabilized"]}


def _project_matrix(model, src, tgt) -> SparseMatrix:
    """Level-preserving part of b from src (one level) into tgt (same level)."""
    cols = []
    for t in src.basis:
        col = {}
        for key, c in model.b_tensor(t).items():
            i = tgt.index.get(key)
            if i is not None:
                col[i] = col.get(i, 0) + c
        cols.append({i: v for i, v in col.items() if v})
    return SparseMatrix(len(tgt), len(src), cols)


def _keyed(m: SparseMatrix, src, tgt):
    return {(tgt.basis[i], src.basis[j]): v for (i, j), v in m.entries.items()}


def _form_target(fs: FixedSpace, k, w) -> ChainSlice:
    if fs.m:
        return form_slice(fs.m, k, w)
    basis = [((), ())] if (k == 0 and w == 0) else []
    return ChainSlice(k, w, "forms", None, basis)


def _inv_basis(fs: FixedSpace, k, w) -> List[PolyForm]:
    if k < 0 or w < 0:
        return []
    if fs.m == 0:
        return [PolyForm(0, {((), ()): 1})] if (k == 0 and w == 0) else []
    return fs.invariant_basis(k, w)


def _full_basis(fs: FixedSpace, k, w) -> List[PolyForm]:
    sl = _form_target(fs, k, w)
    return [PolyForm(fs.m, {key: 1}) for key in sl.basis]


# -- the symbol model ---------------------------------------------------------

def symbol_hh0(model: SymbolModel) -> int:
    """dim of V / [V, V] on the model's window, using the commutators whose
    top terms cancel inside the window (j_a + j_b <= high + 1) and whose
    Fourier modes stay within the cutoff."""
    labels = model.basis_up_to(model.low, model.high)
    index = {a: i for i, a in enumerate(labels)}
    cols = []
    for a in labels:
        for b in labels:
            if a >= b or a[1] + b[1] > model.high + 1 or abs(a[0] + b[0]) > model.cutoff:
                continue
            diff = dict(model.mul(a, b))
            vec_add(diff, model.mul(b, a), -1)
            col = {}
            for c, v in diff.items():
                if c not in index:
                    raise AssertionError(f"commutator [{a}, {b}] leaves the window at {c}")
                col[index[c]] = v
            if col:
                cols.append(col)
    return len(labels) - (rank(SparseMatrix(len(labels), len(cols), cols)) if cols else 0)


def symbol_trace_count(model: SymbolModel) -> dict:
    """HH_0 of the symbol model at its window and at the window widened by one
    in each direction (and one more Fourier mode); stabilized when equal."""
    v0 = symbol_hh0(model)
    wider = SymbolModel(model.cutoff + 1, (model.low - 1, model.high + 1), model.sheets)
    v1 = symbol_hh0(wider)
    return {"per_class": {"plain": v0}, "total": v0, "wider_window": v1, "stabilized": v0 == v1,
            "window": [model.low, model.high], "fourier_cutoff": model.cutoff}


# -- desk models ---------------------------------------------------------------

ROTATION_4 = [[0, 1], [-1, 0]]

DESK_MODELS = ("weyl1", "weyl2", "weyl1_z2", "weyl1_z4", "symbol")


def desk_model(name: str) -> FilteredModel:
    if name == "weyl1":
        return FilteredModel(weyl_algebra(1), "weyl1")
    if name == "weyl2":
        return FilteredModel(weyl_algebra(2), "weyl2")
    if name == "weyl1_z2":
        w = weyl_algebra(1)
        g = close_group([[[-1, 0], [0, -1]]])
        return FilteredModel(crossed_product(w, LinearAction(g, w)), "weyl1_z2")
    if name == "weyl1_z4":
        w = weyl_algebra(1, sector="parity")
        g = close_group([ROTATION_4])
        return FilteredModel(crossed_product(w, LinearAction(g, w)), "weyl1_z4")
    if name == "symbol":
        return FilteredModel(symbol_model(2, (-4, 4)), "symbol")
    raise UnsupportedModel(f"unknown desk model {name!r}; choose from {', '.join(DESK_MODELS)}")


def spectral_report(fm: FilteredModel, max_level: int, max_degree: int) -> dict:
    """Everything the `spectral` subcommand prints for one model."""
    if fm.kind == "symbol":
        return {"model": fm.name, "traces": fm.trace_count(0)}
    out = {"model": fm.name, "classes": [fm.class_label(c) for c in range(len(fm.classes))]}
    out["e0"] = fm.e0_page(max_level, max_degree).to_json()
    out["e0_check"] = fm.e0_check(max_level, max_degree)
    e1, e1rep = fm.e1_check(max_level, max_degree, raise_on_mismatch=False)
    out["e1"] = e1.to_json()
    out["e1_check"] = e1rep
    out["d1_equals_delta"] = fm.verify_d1_equals_delta(max_level, max_degree)
    e2, e2rep = fm.e2_report(max_level, max_degree)
    out["e2"] = e2.to_json()
    out["e2_check"] = e2rep
    out["d2_zero"] = fm.d2_check(max_level, max_degree)
    out["hh"] = [{"k": k, "w": max_level, **_strip(fm.hh_filtered(k, max_level))} for k in range(max_degree + 1)]
    out["hc_hp"] = [fm.hc_and_hp(k, max_level, max_degree=max_degree) for k in range(max_degree + 1)]
    out["traces"] = fm.trace_count(max_level)
    return out


def _strip(res):
    return {"value": res["value"], "stabilized": res["stabilized"],
            "per_class": {str(c): {"value": v["value"], "stabilized": v["stabilized"], "depth": v["depth"]}
                          for c, v in res["per_class"].items()}}
