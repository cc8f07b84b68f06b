"""The identity battery behind ``verify`` and the acceptance suite.

Every suite returns a list of entries

    {"suite", "check", "model", "coords", "pass", ["witness"], ["values"]}

where ``witness`` (only on failure) names the first failing basis column and
the nonzero entries of lhs - rhs on it.  Suites take a ``Window``; each
suite clamps the window to its own cap so a narrowed window runs a subset.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from math import comb
from typing import Callable, Dict, List, Optional, Sequence

from .algebras import (LinearAction, PolynomialAlgebra, crossed_product, polynomial_algebra,
                       truncated_polynomial)
from .forms import PolyForm, d_matrix, form_basis, form_dims, hkr_chi, hkr_E
from .groups import close_group, trivial_group
from .hochschild import (HochschildModel, map_F_matrix, map_G_matrix, twisted_for_class)
from .koszul import (FixedSpace, invariant_koszul_homology, koszul_complex, koszul_tensor_split)
from .linalg import SparseMatrix, rank, scalar_str
from .spectral import FilteredModel, desk_model
from .symplectic import verify_symplectic

S3_GENERATORS = ([[0, 1, 0], [1, 0, 0], [0, 0, 1]], [[0, 1, 0], [0, 0, 1], [1, 0, 0]])

# fixed-point cases: name -> generator of the group acting on Q^n
FIXED_POINT_CASES = {
    "sign_Q1": [[-1]],
    "diag_1_-1": [[1, 0], [0, -1]],
    "rotation_order4": [[0, -1], [1, 0]],
    "swap_Q2": [[0, 1], [1, 0]],
}

WEYL_MODELS = ("weyl1", "weyl1_z2")
CLASSICAL_TARGETS = {"weyl1": (0, 0, 1, 0), "weyl1_z2": (1, 0, 1, 0)}


@dataclass(frozen=True)
class Window:
    """Upper bounds shared by all suites (None = the suite's own cap)."""
    max_weight: Optional[int] = None
    max_degree: Optional[int] = None
    depth: Optional[int] = None

    def w(self, cap: int) -> int:
        return cap if self.max_weight is None else min(cap, self.max_weight)

    def k(self, cap: int) -> int:
        return cap if self.max_degree is None else min(cap, self.max_degree)

    def to_json(self):
        return {"max_weight": self.max_weight, "max_degree": self.max_degree, "depth": self.depth}


# -- models --------------------------------------------------------------------

def _crossed(base, gens=None):
    if not gens:
        return crossed_product(base)
    return crossed_product(base, LinearAction(close_group(gens), base))


def simplicial_models() -> Dict[str, tuple]:
    """name -> (algebra factory, degree cap, weight cap)."""
    return {
        "Q[x]": (lambda: _crossed(polynomial_algebra(1)), 4, 6),
        "Q[x]⋊Z/2(sign)": (lambda: _crossed(polynomial_algebra(1), [[[-1]]]), 4, 6),
        "Q[x,y]": (lambda: _crossed(polynomial_algebra(2)), 4, 6),
        "Q[x,y]⋊Z/2(swap)": (lambda: _crossed(polynomial_algebra(2), [[[0, 1], [1, 0]]]), 4, 6),
        "Q[x]/x^4": (lambda: _crossed(truncated_polynomial(1, 4)), 4, 6),
        "Q[x]/x^4⋊Z/2(sign)": (lambda: _crossed(truncated_polynomial(1, 4), [[[-1]]]), 4, 6),
        # reduced window: the full k <= 4, w <= 6 slices hold millions of chains
        "Q[x,y,z]⋊S3": (lambda: _crossed(polynomial_algebra(3), list(S3_GENERATORS)), 3, 2),
    }


class CorruptedPolynomial(PolynomialAlgebra):
    """Q[x] with one wrong structure constant x * x = 2 x^2 (fault-injection fixture)."""

    def __init__(self):
        super().__init__(1)
        self.name = "Q[x] (corrupted x*x)"

    def _mul(self, a, b):
        out = super()._mul(a, b)
        if a == (1,) and b == (1,):
            return {k: 2 * v for k, v in out.items()}
        return out


# -- helpers -------------------------------------------------------------------

def _witness(diff: SparseMatrix, basis: Sequence = None):
    hit = diff.first_nonzero_column()
    if hit is None:
        return None
    j, col = hit
    out = {"column": j, "difference": [[i, scalar_str(v)] for i, v in sorted(col.items())]}
    if basis is not None:
        out["basis"] = repr(basis[j])
    return out


def _entry(suite, check, model, coords, ok, witness=None, values=None):
    e = {"suite": suite, "check": check, "model": model, "coords": coords, "pass": bool(ok)}
    if not ok and witness is not None:
        e["witness"] = witness
    if values is not None:
        e["values"] = values
    return e


def _zero_entry(suite, check, model, coords, product: SparseMatrix, basis):
    ok = product.is_zero()
    return _entry(suite, check, model, coords, ok, None if ok else _witness(product, basis))


def _equal_entry(suite, check, model, coords, lhs: SparseMatrix, rhs: SparseMatrix, basis):
    if lhs.shape != rhs.shape:
        return _entry(suite, check, model, coords, False, {"shape": [list(lhs.shape), list(rhs.shape)]})
    return _zero_entry(suite, check, model, coords, lhs - rhs, basis)


def _sectors(model: HochschildModel, ks, w, cls):
    out = set()
    for k in ks:
        if k >= 0:
            out.update(model.sectors(k, w, cls))
    return sorted(out, key=repr) or [None]


def _wrap(suite, model, entries, coord_keys=("n", "k", "w", "p", "class", "element")):
    """Adapt entries produced by the symplectic/spectral modules."""
    out = []
    for e in entries:
        check = e.get("relation") or e.get("check")
        coords = {c: e[c] for c in coord_keys if c in e}
        values = {k: v for k, v in e.items()
                  if k not in coords and k not in ("relation", "check", "pass", "witness")}
        out.append(_entry(suite, check, model, coords, e["pass"], e.get("witness"), values or None))
    return out


# -- suites --------------------------------------------------------------------

def _select(models: dict, only):
    return [(k, v) for k, v in models.items() if only is None or k == only]


def _weyl_models(models):
    return models if models is not None else {n: (lambda n=n: desk_model(n)) for n in WEYL_MODELS}


def suite_simplicial(window: Window, only=None, models: Dict[str, tuple] = None) -> List[dict]:
    """b^2 = 0, b_h^2 = 0, B^2 = 0 and bB + Bb = 0 on every slice of the window.

    Only identities whose degrees all stay <= the degree cap are checked."""
    out = []
    for name, (make, kcap, wcap) in _select(models or simplicial_models(), only):
        M = HochschildModel(make())
        K, W = window.k(kcap), window.w(wcap)
        for ci in range(len(M.classes)):
            tw = twisted_for_class(M, ci)
            label = M.class_label(ci)
            for w in range(W + 1):
                for k in range(K + 1):
                    for sec in _sectors(M, (k,), w, ci):
                        co = {"k": k, "w": w, "class": label, "sector": list(sec) if sec else None}
                        C = {d: M.slice(d, w, ci, sec) for d in range(k - 2, k + 3) if d >= 0}
                        src = C[k]
                        if not src.dim:
                            continue
                        if k >= 2:
                            prod = M.b_matrix(C[k - 1], C[k - 2]) @ M.b_matrix(src, C[k - 1])
                            out.append(_zero_entry("simplicial", "b_squared", name, co, prod, src.basis))
                        if k + 2 <= K:
                            prod = M.B_matrix(C[k + 1], C[k + 2]) @ M.B_matrix(src, C[k + 1])
                            out.append(_zero_entry("simplicial", "B_squared", name, co, prod, src.basis))
                        if 1 <= k and k + 1 <= K:
                            lhs = M.b_matrix(C[k + 1], src) @ M.B_matrix(src, C[k + 1])
                            rhs = M.B_matrix(C[k - 1], src) @ M.b_matrix(src, C[k - 1])
                            out.append(_zero_entry("simplicial", "bB_plus_Bb", name, co, lhs + rhs, src.basis))
                    if k >= 2:
                        for sec in (tw.sectors(k, w) or [None]):
                            T = tw.slice(k, w, sec)
                            if not T.dim:
                                continue
                            prod = tw.bh_matrix(tw.slice(k - 1, w, sec), tw.slice(k - 2, w, sec)) @ tw.bh_matrix(
                                T, tw.slice(k - 1, w, sec))
                            co = {"k": k, "w": w, "class": label, "sector": list(sec) if sec else None}
                            out.append(_zero_entry("simplicial", "bh_squared", name, co, prod, T.basis))
    return out


def suite_crossed_maps(window: Window, only=None, models: Dict[str, tuple] = None) -> List[dict]:
    """F and G are chain maps and G F = id on Γ_h-invariant twisted chains."""
    out = []
    caps = {"Q[x,y,z]⋊S3": (2, 2)}
    for name, (make, _, _) in _select(models or simplicial_models(), only):
        M = HochschildModel(make())
        if M.group.is_trivial():
            continue
        kcap, wcap = caps.get(name, (3, 4))
        K, W = window.k(kcap), window.w(wcap)
        for ci in range(len(M.classes)):
            tw = twisted_for_class(M, ci)
            label = M.class_label(ci)
            for k in range(K + 1):
                for w in range(W + 1):
                    T, C = tw.slice(k, w), M.slice(k, w, ci)
                    if not T.dim and not C.dim:
                        continue
                    co = {"k": k, "w": w, "class": label}
                    F = map_F_matrix(M, tw, T, C)
                    G = map_G_matrix(M, tw, C, T)
                    if k >= 1:
                        Tl, Cl = tw.slice(k - 1, w), M.slice(k - 1, w, ci)
                        Fl = map_F_matrix(M, tw, Tl, Cl)
                        Gl = map_G_matrix(M, tw, Cl, Tl)
                        out.append(_equal_entry("crossed_maps", "F_chain_map", name, co,
                                                M.b_matrix(C, Cl) @ F, Fl @ tw.bh_matrix(T, Tl), T.basis))
                        out.append(_equal_entry("crossed_maps", "G_chain_map", name, co,
                                                tw.bh_matrix(T, Tl) @ G, Gl @ M.b_matrix(C, Cl), C.basis))
                    P = tw.projector(T)
                    out.append(_equal_entry("crossed_maps", "GF_identity_on_invariants", name, co,
                                            G @ F @ P, P, T.basis))
    return out


def suite_hkr(window: Window, only=None) -> List[dict]:
    out = []
    for n in (1, 2):
        name = "Q[x]" if n == 1 else "Q[x,y]"
        if only is not None and only != name:
            continue
        M = HochschildModel(polynomial_algebra(n))
        for k in range(window.k(3) + 1):
            for w in range(window.w(5) + 1):
                got = M.hh(k, w)
                expect = comb(n, k) * (comb(w - k + n - 1, n - 1) if w >= k else 0)
                out.append(_entry("hkr", "hh_dimension", name, {"k": k, "w": w}, got == expect,
                                  {"hh": got, "forms": expect}, {"hh": got, "forms": expect}))
                bad = None
                for key in form_basis(n, k, w):
                    f = PolyForm(n, {key: 1})
                    back = hkr_chi(n, hkr_E(f))
                    if back != f:
                        bad = {"form": f.to_json(), "chi_E": back.to_json()}
                        break
                out.append(_entry("hkr", "chi_E_identity", name, {"k": k, "w": w}, bad is None, bad))
    return out


def suite_fixed_point(window: Window, only=None) -> List[dict]:
    """Twisted bar homology = Koszul homology = invariant fixed-point forms (and the crossed count)."""
    out = []
    for name, gen in _select(FIXED_POINT_CASES, only):
        G = close_group([gen])
        A = polynomial_algebra(G.dim)
        M = HochschildModel(crossed_product(A, LinearAction(G, A)))
        for ci in range(len(M.classes)):
            gam = M.classes[ci].representative
            tw = twisted_for_class(M, ci)
            fs = FixedSpace(G, gam)
            for k in range(window.k(2) + 1):
                for w in range(window.w(4) + 1):
                    vals = {"bar": tw.invariant_homology(k, w),
                            "koszul": invariant_koszul_homology(G, gam, k, w),
                            "forms": fs.invariant_dim(k, w),
                            "crossed": M.hh(k, w, ci)}
                    ok = len(set(vals.values())) == 1
                    out.append(_entry("fixed_point", "three_pipelines", name,
                                      {"k": k, "w": w, "class": M.class_label(ci)}, ok, vals, vals))
    return out


def suite_koszul(window: Window, only=None) -> List[dict]:
    out = []
    W = window.w(5)
    complexes = {}
    for n in (1, 2, 3):
        ring = polynomial_algebra(n)
        gens = [{tuple(int(a == i) for a in range(n)): 1} for i in range(n)]
        K = koszul_complex(ring, gens)
        complexes[n] = K
        for l in range(n + 1):
            for w in range(W + 1):
                h = K.homology(l, w)
                expect = 1 if (l == 0 and w == 0) else 0
                out.append(_entry("koszul", "acyclic", f"K(Q[x1..x{n}])", {"l": l, "w": w}, h == expect,
                                  {"homology": h, "expected": expect}))
    for n1, n2 in ((1, 1), (1, 2)):
        split = koszul_tensor_split(complexes[n1], complexes[n2])
        for l in range(n1 + n2 + 1):
            for w in range(min(W, 4) + 1):
                name = f"K(Q^{n1}) ⊗ K(Q^{n2})"
                ok = split.check(l, w)
                out.append(_entry("koszul", "tensor_split_iso", name, {"l": l, "w": w}, ok))
                left, right = split.kunneth(l, w)
                out.append(_entry("koszul", "kunneth", name, {"l": l, "w": w}, left == right,
                                  {"product": left, "sum_of_products": right}, {"product": left, "sum_of_products": right}))
    return out


def suite_symplectic(window: Window, only=None) -> List[dict]:
    groups = [(1, close_group([[[-1, 0], [0, -1]]])), (2, close_group([[[1, 0, 0, 0], [0, -1, 0, 0],
                                                                       [0, 0, 1, 0], [0, 0, 0, -1]]]))]
    entries = verify_symplectic(max_n=2, max_w=window.w(5), groups=groups)
    if window.max_degree is not None:
        entries = [e for e in entries if e.get("k") is None or e["k"] <= window.max_degree]
    return _wrap("symplectic", "Q^2n", entries)


def suite_d1(window: Window, only=None, models=None) -> List[dict]:
    out = []
    for name, make in _select(_weyl_models(models), only):
        fm = make()
        L, K = window.w(4), window.k(2)
        _, rep = fm.e1_check(L, K, raise_on_mismatch=False)
        out += _wrap("d1", name, rep)
        out += _wrap("d1", name, fm.verify_d1_equals_delta(L, K))
    return out


def suite_e2(window: Window, only=None, models=None) -> List[dict]:
    out = []
    for name, make in _select(_weyl_models(models), only):
        fm = make()
        L, K = window.w(4), window.k(2)
        _, rep = fm.e2_report(L, K)
        out += _wrap("e2_d2", name, rep)
        out += _wrap("e2_d2", name, fm.d2_check(L, K))
        for k in range(window.k(3) + 1):
            for c in range(len(fm.classes)):
                out += _wrap("e2_d2", name, [fm.abutment_check(k, window.w(4), c)])
    return out


def suite_classical(window: Window, only=None, models=None) -> List[dict]:
    """HH of Weyl(1) and Weyl(1)⋊Z/2 per stabilized total dimension, depth <= 8."""
    out = []
    depth = 8 if window.depth is None else min(8, window.depth)
    w = window.w(4)
    for name, make in _select(_weyl_models(models), only):
        if name not in CLASSICAL_TARGETS:
            continue
        fm = make()
        target = CLASSICAL_TARGETS[name]
        for k in range(window.k(3) + 1):
            res = fm.hh_filtered(k, w, depth=depth)
            # the classes sit at level k (HH_2) or 0 (HH_0); narrower windows see less
            expect = target[k] if w >= k else 0
            per = {str(c): v["value"] for c, v in res["per_class"].items()}
            out.append(_entry("classical", "hh_total", name, {"k": k, "w": w},
                              res["value"] == expect and res["stabilized"],
                              {"value": res["value"], "expected": expect, "stabilized": res["stabilized"]},
                              {"value": res["value"], "expected": expect, "per_class": per,
                               "stabilized": res["stabilized"]}))
        if not fm.group.is_trivial():
            for c in range(len(fm.classes)):
                fs, _, _ = fm.fixed(c)
                if fs.m:
                    continue
                v = fm.hh_filtered(0, w, depth=depth, cls=c)["value"]
                ok = v == 1 and fs.invariant_dim(0, 0) == 1
                out.append(_entry("classical", "point_class_is_Q_in_degree_0", name,
                                  {"k": 0, "w": w, "class": fm.class_label(c)}, ok,
                                  {"hh0": v, "fixed_dim": fs.m}))
    return out


def _connes_hc(n: int, k: int, w: int) -> int:
    """HC_k(Q[V])_w from forms: Ω^k/dΩ^{k-1} plus de Rham cohomology (Q at weight 0) below."""
    top = form_dims(n, k, w) - (rank(d_matrix(n, k - 1, w)) if k >= 1 else 0)
    rest = sum(1 for j in range(1, k // 2 + 1) if w == 0 and k - 2 * j == 0)
    return top + rest


def suite_sbi(window: Window, only=None, models=None) -> List[dict]:
    """SBI consequences: literal HC = sum HH on the Weyl models (where B vanishes on
    homology), and the de Rham form of HC on polynomial slices."""
    out = []
    w = window.w(4)
    for name, make in _select(_weyl_models(models), only):
        fm = make()
        K = window.k(3)
        top = K + 2  # HH of the Weyl(1) models vanishes above degree 2, so parity sums end here
        hc = {d: fm.hc_filtered(d, w) for d in range(top + 1)}
        hh = {d: fm.hh_filtered(d, w) for d in range(top + 1)}
        # The identities concern HC and HH themselves, not images of F_w: below the
        # level of the generators they fail (HC_2(Weyl(1)) has a level-0 generator
        # while F_1 HH_2 = 0).  A slice counts as weight-stabilized when every value
        # it uses agrees at w and w - s; other slices are not checked.
        s = fm.step
        hc_lo = {d: fm.hc_filtered(d, w - s)["value"] if w - s >= 0 else 0 for d in range(top + 1)}
        hh_lo = {d: fm.hh_filtered(d, w - s)["value"] if w - s >= 0 else 0 for d in range(top + 1)}

        def settled(degrees):
            return all(hc[d]["value"] == hc_lo[d] and hh[d]["value"] == hh_lo[d]
                       and hc[d]["stabilized"] and hh[d]["stabilized"] for d in degrees)

        for k in range(K + 1):
            parts = [k - 2 * j for j in range(k // 2 + 1)]
            if settled(parts):
                rhs = sum(hh[d]["value"] for d in parts)
                vals = {"hc": hc[k]["value"], "sum_hh": rhs}
                out.append(_entry("sbi", "hc_equals_sum_hh", name, {"k": k, "w": w},
                                  hc[k]["value"] == rhs, vals, vals))
            degs = list(range(k % 2, top + 1, 2))
            if settled(degs):
                tower = [hc[d]["value"] for d in range(k, top + 1, 2)]
                parity = sum(hh[d]["value"] for d in degs)
                ok = len(tower) >= 2 and tower[-1] == tower[-2] == parity
                vals = {"hp_values": tower, "parity_sum_hh": parity}
                out.append(_entry("sbi", "hp_equals_parity_sum", name, {"k": k, "w": w}, ok, vals, vals))
    for n in (1, 2):
        name = "Q[x]" if n == 1 else "Q[x,y]"
        if (only is not None and only != name) or (only is None and models is not None):
            continue
        M = HochschildModel(polynomial_algebra(n))
        for k in range(window.k(3) + 1):
            for ww in range(window.w(5) + 1):
                got, expect = M.hc(k, ww), _connes_hc(n, k, ww)
                out.append(_entry("sbi", "hc_de_rham_form", name, {"k": k, "w": ww}, got == expect,
                                  {"hc": got, "forms": expect}, {"hc": got, "forms": expect}))
    return out


SUITES: Dict[str, Callable[[Window], List[dict]]] = {
    "simplicial": suite_simplicial,
    "crossed_maps": suite_crossed_maps,
    "hkr": suite_hkr,
    "fixed_point": suite_fixed_point,
    "koszul": suite_koszul,
    "symplectic": suite_symplectic,
    "d1": suite_d1,
    "e2_d2": suite_e2,
    "classical": suite_classical,
    "sbi": suite_sbi,
}


def suite_models(name: str) -> List[str]:
    """The model names a suite iterates over (its job split)."""
    if name in ("simplicial",):
        return list(simplicial_models())
    if name == "crossed_maps":
        return [m for m in simplicial_models() if "⋊" in m]
    if name == "hkr":
        return ["Q[x]", "Q[x,y]"]
    if name == "fixed_point":
        return list(FIXED_POINT_CASES)
    if name in ("koszul", "symplectic"):
        return [None]
    if name == "sbi":
        return list(WEYL_MODELS) + ["Q[x]", "Q[x,y]"]
    return list(WEYL_MODELS)


def jobs(window: Window, suites: Sequence[str] = None) -> List[tuple]:
    """(suite, model) pairs of verify_all in report order."""
    return [(s, m) for s in (suites or list(SUITES)) for m in suite_models(s)]


def run_job(suite: str, model, window: Window) -> List[dict]:
    if suite == FAULT_SUITE:
        return corrupted_suite(window)
    return SUITES[suite](window, only=model)


def run_suite(name: str, window: Window) -> List[dict]:
    return SUITES[name](window)


FAULT_SUITE = "fault_injection"


def corrupted_suite(window: Window) -> List[dict]:
    """b^2 on Q[x] with a corrupted structure constant; must report failures."""
    models = {"Q[x] (corrupted x*x)": (lambda: crossed_product(CorruptedPolynomial()), 3, 4)}
    return suite_simplicial(window, models=models)


def timed(fn, *args):
    t = time.perf_counter()
    res = fn(*args)
    return res, time.perf_counter() - t
