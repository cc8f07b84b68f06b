"""From a validated ProblemConfig to models, request cells and their values.

A request is split into independent cells (one per degree/weight pair, or one
per model for ``spectral`` and per suite job for ``verify``).  Cells are the
unit of scheduling and of caching; a cell is described by a JSON-able dict so
that a worker process can rebuild everything it needs from the description
alone.
"""

from __future__ import annotations

import json
import threading
from functools import lru_cache
from typing import Dict, List, Optional

from .algebras import (LinearAction, PolynomialAlgebra, WeylAlgebra, crossed_product, polynomial_algebra,
                       symbol_model, truncated_polynomial, weyl_algebra)
from .config import ProblemConfig, matrix_value
from .errors import ActionInvalid, ConfigError, CrossedHomError, NotFinite, UnsupportedModel
from .groups import close_group, conjugacy_classes, mat_inverse, trivial_group
from .hochschild import HochschildModel, twisted_for_class
from .spectral import FilteredModel, spectral_report, symbol_trace_count
from . import battery


class TrivialAction(LinearAction):
    """A nontrivial group acting by the identity (crossed product = A ⊗ QΓ)."""

    def __init__(self, group, algebra):
        self.group = group
        self.algebra = algebra
        self._memo = {}
        self._lock = threading.Lock()
        self._gens = None


class Problem:
    """The algebra of a config, its Hochschild model and (if filtered) its spectral model."""

    def __init__(self, cfg: ProblemConfig):
        self.cfg = cfg
        spec = cfg.algebra
        gens = self._generators()
        self.group = self._group(gens)
        self.base = self._base(spec)
        self.algebra = self._crossed()
        self.kind = spec.name
        self.trivial_action = isinstance(self.algebra.action, TrivialAction)
        self._hoch = None
        self._filtered = None

    # -- construction -------------------------------------------------------
    def _generators(self):
        cfg = self.cfg
        act = cfg.action
        gens = [matrix_value(m) for m in cfg.group.generators] if cfg.group else []
        if act is not None and act.kind == "explicit":
            if not act.matrices:
                raise ConfigError("explicit action needs matrices", field="action.matrices")
            if gens and len(gens) != len(act.matrices):
                raise ConfigError(f"{len(act.matrices)} action matrices for {len(gens)} group generators",
                                  field="action.matrices")
            # an explicit matrix M gives g.X_i = sum_j M_ij X_j, i.e. g^{-1} = M in LinearAction terms
            try:
                return [mat_inverse(matrix_value(m)) for m in act.matrices]
            except (ValueError, ZeroDivisionError) as e:
                raise ConfigError(f"action matrix is not invertible ({e})", field="action.matrices") from None
        return gens

    def _group(self, gens):
        if not gens:
            return None
        dims = {len(g) for g in gens}
        if len(dims) != 1:
            raise ConfigError("group generators have different sizes", field="group.generators")
        try:
            return close_group(gens)
        except NotFinite as e:
            raise ConfigError(str(e), field="group.generators") from None
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"generator is not invertible ({e})", field="group.generators") from None

    def _base(self, spec):
        sector = None if spec.sector in (None, "none") else spec.sector
        if spec.name in ("polynomial", "truncated", "ground") and sector is not None:
            raise ConfigError(f"sector {spec.sector!r} only applies to weyl algebras", field="algebra.sector")
        if spec.name == "polynomial":
            return polynomial_algebra(spec.n)
        if spec.name == "truncated":
            if spec.order is None:
                raise ConfigError("truncated algebra needs an order", field="algebra.order")
            return truncated_polynomial(spec.n, spec.order)
        if spec.name == "ground":
            # Q itself, carried as Q[X_1..X_m]/(X_i) so a group on Q^m can act (trivially)
            m = self.group.dim if self.group is not None else max(spec.n, 1)
            return truncated_polynomial(m, 1)
        if spec.name == "weyl":
            if spec.n < 1:
                raise ConfigError("weyl algebra needs n >= 1", field="algebra.n")
            return weyl_algebra(spec.n, sector if spec.sector is not None else "charge")
        if spec.name == "symbol":
            if spec.fourier_cutoff is None or spec.window is None:
                raise ConfigError("symbol model needs fourier_cutoff and window", field="algebra")
            try:
                return symbol_model(spec.fourier_cutoff, tuple(spec.window), spec.sheets)
            except (CrossedHomError, ValueError) as e:
                raise ConfigError(str(e), field="algebra") from None
        raise ConfigError(f"unknown algebra {spec.name!r}", field="algebra.name")

    def _crossed(self):
        base, grp = self.base, self.group
        act = self.cfg.action
        if grp is None or grp.is_trivial():
            return crossed_product(base)
        if act is not None and act.kind == "trivial":
            return crossed_product(base, TrivialAction(grp, base))
        if isinstance(base, PolynomialAlgebra) and base.bounds is not None and all(b == 0 for b in base.bounds):
            # the ground field: every linear action is trivial on Q
            return crossed_product(base, TrivialAction(grp, base))
        try:
            action = LinearAction(grp, base)
        except ActionInvalid as e:
            raise ConfigError(str(e), field="group.generators") from None
        try:
            return crossed_product(base, action)
        except ActionInvalid as e:
            hint = ""
            if isinstance(base, WeylAlgebra) and self.cfg.algebra.sector is None:
                hint = "; set algebra.sector to 'parity' or 'none' for actions that mix x and xi"
            raise ConfigError(f"{e}{hint}", field="group.generators") from None

    # -- models -----------------------------------------------------------------
    @property
    def filtered(self):
        return not self.algebra.graded

    def hochschild(self) -> HochschildModel:
        if self._hoch is None:
            self._hoch = HochschildModel(self.algebra)
        return self._hoch

    def spectral(self) -> FilteredModel:
        if self._filtered is None:
            if self.trivial_action and self.kind != "ground":
                raise UnsupportedModel("spectral pages need a linear action (fixed spaces come from the matrices)")
            self._filtered = FilteredModel(self.algebra, self.kind)
        return self._filtered

    def classes(self) -> List[dict]:
        grp = self.algebra.group
        out = []
        for i, c in enumerate(conjugacy_classes(grp)):
            out.append({"index": i, "representative": [[str(x) for x in row] for row in grp.matrix(c.representative)],
                        "size": c.size, "centralizer_order": len(c.centralizer)})
        return out

    def describe(self) -> dict:
        return {"algebra": self.base.describe(), "group_order": self.algebra.group.order,
                "classes": self.classes()}


@lru_cache(maxsize=8)
def _problem_from_echo(echo_json: str) -> Problem:
    return Problem(ProblemConfig.model_validate(json.loads(echo_json)))


def problem_for(echo: dict) -> Problem:
    return _problem_from_echo(json.dumps(echo, sort_keys=True))


# ---------------------------------------------------------------------------
# cells

def request_cells(problem: Problem, req, window: dict) -> List[dict]:
    """Cell descriptions of one request, in report order.

    ``window`` holds the command-line caps (max_weight, max_degree, depth),
    which narrow what the request asks for."""
    kmax, wmax, depth = window.get("max_degree"), window.get("max_weight"), window.get("depth")
    depth = req.depth if req.depth is not None else depth
    ks, ws = req.degree_list(kmax), req.weight_list(wmax)
    if req.kind == "verify":
        win = battery.Window(max(ws) if ws else 0, max(ks) if ks else 0, depth)
        return [{"kind": "verify", "suite": s, "model": m, "window": win.to_json()}
                for s, m in battery.jobs(win)]
    if req.kind == "spectral":
        return [{"kind": "spectral", "max_degree": max(ks) if ks else 0, "max_weight": max(ws) if ws else 0}]
    ncls = len(problem.classes())
    classes = req.classes if req.classes is not None else list(range(ncls))
    bad = [c for c in classes if not 0 <= c < ncls]
    if bad:
        raise UnsupportedModel(f"class index {bad[0]} out of range (the group has {ncls} classes)")
    return [{"kind": req.kind, "k": k, "w": w, "classes": list(classes), "depth": depth, "route": req.route}
            for k in ks for w in ws]


def evaluate_cell(problem: Problem, cell: dict):
    """The JSON-able value of one cell (exceptions propagate to the caller)."""
    kind = cell["kind"]
    if kind == "verify":
        win = battery.Window(**cell["window"])
        return battery.run_job(cell["suite"], cell["model"], win)
    if kind == "spectral":
        if problem.kind == "symbol":
            return {"model": "symbol", "traces": symbol_trace_count(problem.base)}
        fm = problem.spectral()
        if fm.kind == "graded":
            raise UnsupportedModel("spectral pages need a filtered algebra (weyl); graded algebras "
                                   "have E^0 = E^infinity, use hh instead")
        return spectral_report(fm, cell["max_weight"], cell["max_degree"])
    k, w = cell["k"], cell["w"]
    if problem.kind == "symbol":
        return _symbol_cell(problem, kind, k, w)
    per = {}
    for c in cell["classes"]:
        per[str(c)] = _class_value(problem, kind, k, w, c, cell["depth"], cell["route"])
    out = {"k": k, "w": w, "per_class": per}
    if all(isinstance(v.get("value"), int) for v in per.values()):
        out["total"] = sum(v["value"] for v in per.values())
    return out


def _symbol_cell(problem, kind, k, w):
    if kind not in ("hh", "hc") or k != 0:
        raise UnsupportedModel("the symbol model only supports HH_0 (= HC_0); "
                               "its Laurent truncations are not subcomplexes in higher degrees")
    res = symbol_trace_count(problem.base)
    return {"k": 0, "w": w, "per_class": {"0": {"value": res["total"], "stabilized": res["stabilized"]}},
            "total": res["total"], "window": res["window"]}


def _class_value(problem: Problem, kind, k, w, c, depth, route) -> dict:
    if not problem.filtered:
        m = problem.hochschild()
        if kind == "hh":
            return {"value": m.hh(k, w, c)}
        if kind == "hc":
            return {"value": m.hc(k, w, c)}
        if kind == "hp":
            value, stable, vals = m.hp(k, w, c, max_shift=2)
            return {"value": value, "stabilized": stable, "hc_values": vals}
        if kind == "twisted":
            tw = twisted_for_class(m, c)
            return {"value": tw.invariant_homology(k, w), "twisted_homology": tw.homology(k, w),
                    "centralizer_order": len(tw.centralizer)}
    fm = problem.spectral()
    if kind in ("hh", "twisted"):
        r = fm.hh_filtered(k, w, depth, cls=c, route=route if kind == "hh" else "twisted")
    elif kind == "hc":
        r = fm.hc_filtered(k, w, depth, cls=c, route=route)
    elif kind == "hp":
        vals = [fm.hc_filtered(k + 2 * m, w, depth, cls=c, route=route) for m in range(3)]
        v = [x["value"] for x in vals]
        return {"value": v[-1], "stabilized": v[-1] == v[-2] and all(x["stabilized"] for x in vals),
                "hc_values": v}
    else:
        raise UnsupportedModel(f"unknown request kind {kind!r}")
    info = next(iter(r["per_class"].values()))
    return {"value": info["value"], "stabilized": info["stabilized"], "depth": info["depth"],
            "route": info.get("route")}
