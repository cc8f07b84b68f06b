"""Hochschild, twisted and mixed (b, B) complexes of crossed products.

Chains of B = A ⋊ Γ are tuples of factors (a, g) with a a base label and g a
group index.  The normalized complex (default) drops every tensor with the
unit (1, e) in a position >= 1.  For a graded base each (degree, weight)
slice is finite; a slice is further split by conjugacy class of the product
g_1 ... g_k g_0 and by the base algebra's sector grading, both preserved
by b and B.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .algebras import Algebra, CrossedProduct, LinearAction, as_crossed, compositions
from .errors import WrongComponent
from .groups import class_lookup, conjugacy_classes
from .linalg import SparseMatrix, block_matrix, homology_dim, rank, vec_add

Tensor = Tuple
Chain = Dict[Tensor, object]


class ChainSlice:
    """A finite basis of tensors at fixed degree with known coordinates.

    ``weight`` is the total weight for graded models; for filtered models it
    is the top filtration level of the space (which may hold several levels,
    listed in ``levels``).
    """

    def __init__(self, degree, weight, class_id, sector, basis, levels=None):
        self.degree = degree
        self.weight = weight
        self.class_id = class_id
        self.sector = sector
        self.basis = list(basis)
        self.index = {t: i for i, t in enumerate(self.basis)}
        self.levels = levels if levels is not None else [weight]

    def __len__(self):
        return len(self.basis)

    @property
    def dim(self):
        return len(self.basis)

    def coords(self):
        return {"k": self.degree, "w": self.weight, "class": self.class_id,
                "sector": list(self.sector) if self.sector is not None else None}

    def vector(self, chain: Chain) -> Dict[int, object]:
        out = {}
        for t, c in chain.items():
            if c:
                try:
                    out[self.index[t]] = c
                except KeyError:
                    raise KeyError(f"tensor {t} is not in slice {self.coords()}") from None
        return out

    def chain(self, vec: Dict[int, object]) -> Chain:
        return {self.basis[i]: c for i, c in vec.items() if c}

    def __repr__(self):
        return f"ChainSlice(k={self.degree}, w={self.weight}, class={self.class_id}, dim={self.dim})"


def matrix_of(op, src: ChainSlice, tgt: ChainSlice) -> SparseMatrix:
    """Matrix of a linear map given on basis tensors (op(t) is a Chain)."""
    cols = []
    index = tgt.index
    for t in src.basis:
        col = {}
        for key, c in op(t).items():
            if not c:
                continue
            i = index.get(key)
            if i is None:
                raise AssertionError(
                    f"image tensor {key} of {t} lies outside target slice {tgt.coords()}")
            col[i] = col.get(i, 0) + c
        cols.append(col)
    return SparseMatrix(len(tgt), len(src), cols)


def _expand(factors: Sequence[Dict]) -> Dict[Tuple, object]:
    """Tensor product of combinations: [{a: x}, {b: y}] -> {(a, b): x y}."""
    out = {(): 1}
    for f in factors:
        nxt = {}
        for t, c in out.items():
            for a, x in f.items():
                key = t + (a,)
                nxt[key] = nxt.get(key, 0) + c * x
        out = {t: c for t, c in nxt.items() if c}
        if not out:
            break
    return out


def _drop_degenerate(chain: Chain, unit) -> Chain:
    return {t: c for t, c in chain.items() if c and unit not in t[1:]}


class HochschildModel:
    """Hochschild complex of A ⋊ Γ (Γ may be trivial) with slice caching."""

    def __init__(self, algebra: Algebra, normalized: bool = True):
        self.B: CrossedProduct = as_crossed(algebra)
        self.base = self.B.base
        self.group = self.B.group
        self.classes = conjugacy_classes(self.group)
        self.class_of = class_lookup(self.classes)
        self.unit = self.B.unit
        self.normalized = normalized
        self.filtered = not self.B.graded
        self._buckets: Dict[Tuple[int, int], Dict] = {}
        self._slices: Dict[tuple, ChainSlice] = {}

    # -- enumeration ------------------------------------------------------
    def class_label(self, cls):
        if cls is None:
            return None
        if self.group.is_trivial():
            return "plain"
        return self.classes[cls].representative

    def conjugacy_project(self, tensor: Tensor) -> int:
        """Index of the class containing g_1 ... g_k g_0."""
        G = self.group
        p = G.product([f[1] for f in tensor[1:]])
        return self.class_of[G.mul(p, tensor[0][1])]

    def buckets(self, k: int, w: int) -> Dict[Tuple[int, tuple], List[Tensor]]:
        key = (k, w)
        if key not in self._buckets:
            self._buckets[key] = self._enumerate(k, w)
        return self._buckets[key]

    def _enumerate(self, k, w):
        base, G = self.base, self.group
        e = G.identity_index
        unit = base.unit
        lo = base.min_weight
        out = defaultdict(list)
        orders = range(G.order)
        cache = {}
        for comp in compositions(w - (k + 1) * lo, k + 1):
            comp = tuple(c + lo for c in comp)
            lists = []
            for i, d in enumerate(comp):
                if d not in cache:
                    cache[d] = base.basis_of_weight(d)
                lists.append(cache[d])
            if any(not l for l in lists):
                continue
            for labs in itertools.product(*lists):
                unit_pos = [i for i in range(1, k + 1) if labs[i] == unit]
                if unit_pos and G.order == 1 and self.normalized:
                    continue
                sec = base.zero_sector()
                for a in labs:
                    sec = base.add_sectors(sec, base.sector(a))
                for gs in itertools.product(orders, repeat=k):
                    if self.normalized and any(gs[i - 1] == e for i in unit_pos):
                        continue
                    p = G.product(gs)
                    tail = tuple((labs[i], gs[i - 1]) for i in range(1, k + 1))
                    for g0 in orders:
                        cls = self.class_of[G.mul(p, g0)]
                        out[(cls, sec)].append(((labs[0], g0),) + tail)
        return dict(out)

    def slice(self, k: int, w: int, cls: Optional[int] = None, sector: Optional[tuple] = None) -> ChainSlice:
        key = ("s", k, w, cls, sector)
        s = self._slices.get(key)
        if s is None:
            basis = []
            if k >= 0:
                for (c, sec), ts in sorted(self.buckets(k, w).items(), key=lambda kv: kv[0]):
                    if (cls is None or c == cls) and (sector is None or sec == sector):
                        basis.extend(ts)
            s = ChainSlice(k, w, self.class_label(cls), sector, basis)
            s.class_index = cls
            self._slices[key] = s
        return s

    def space(self, k: int, levels: Sequence[int], cls=None, sector=None) -> ChainSlice:
        """Union of the slices at several filtration levels (ascending)."""
        levels = sorted(levels)
        key = ("u", k, tuple(levels), cls, sector)
        s = self._slices.get(key)
        if s is None:
            basis = []
            for lv in levels:
                basis.extend(self.slice(k, lv, cls, sector).basis)
            s = ChainSlice(k, levels[-1] if levels else None, self.class_label(cls), sector, basis, levels)
            s.class_index = cls
            self._slices[key] = s
        return s

    def sectors(self, k: int, w: int, cls=None) -> List[tuple]:
        return sorted({sec for (c, sec) in self.buckets(k, w) if cls is None or c == cls})

    def tensor_level(self, t: Tensor) -> int:
        return sum(self.base.weight(f[0]) for f in t)

    # -- operators on tensors --------------------------------------------
    def b_tensor(self, t: Tensor) -> Chain:
        k = len(t) - 1
        out: Chain = {}
        if k == 0:
            return out
        mul, unit, norm = self.B.mul, self.unit, self.normalized
        for i in range(k):
            prod = mul(t[i], t[i + 1])
            if not prod:
                continue
            sign = -1 if i % 2 else 1
            pre, post = t[:i], t[i + 2:]
            for p, c in prod.items():
                if norm and i > 0 and p == unit:
                    continue
                key = pre + (p,) + post
                out[key] = out.get(key, 0) + sign * c
        prod = mul(t[k], t[0])
        sign = -1 if k % 2 else 1
        mid = t[1:k]
        for p, c in prod.items():
            key = (p,) + mid
            out[key] = out.get(key, 0) + sign * c
        return {key: v for key, v in out.items() if v}

    def B_tensor(self, t: Tensor) -> Chain:
        """Normalized Connes operator: sum_i (-1)^{ni} 1 ⊗ t_i ⊗ ... ⊗ t_n ⊗ t_0 ⊗ ... ⊗ t_{i-1}."""
        if not self.normalized:
            raise ValueError("Connes B is implemented on the normalized complex only")
        n = len(t) - 1
        if t[0] == self.unit:
            return {}
        out: Chain = {}
        for i in range(n + 1):
            key = (self.unit,) + t[i:] + t[:i]
            s = -1 if (n * i) % 2 else 1
            out[key] = out.get(key, 0) + s
        return {key: v for key, v in out.items() if v}

    def b_chain(self, chain: Chain) -> Chain:
        out: Chain = {}
        for t, c in chain.items():
            vec_add(out, self.b_tensor(t), c)
        return out

    def B_chain(self, chain: Chain) -> Chain:
        out: Chain = {}
        for t, c in chain.items():
            vec_add(out, self.B_tensor(t), c)
        return out

    # -- matrices ---------------------------------------------------------
    def target_for(self, src: ChainSlice, degree: int) -> ChainSlice:
        cls = getattr(src, "class_index", None)
        if self.filtered:
            return self.space(degree, [lv for lv in range(self.base.min_weight, max(src.levels) + 1)
                                       if lv <= max(src.levels)], cls, src.sector)
        return self.slice(degree, src.weight, cls, src.sector)

    def b_matrix(self, src: ChainSlice, tgt: ChainSlice = None) -> SparseMatrix:
        if tgt is None:
            tgt = self.target_for(src, src.degree - 1)
        return matrix_of(self.b_tensor, src, tgt)

    def B_matrix(self, src: ChainSlice, tgt: ChainSlice = None) -> SparseMatrix:
        if tgt is None:
            tgt = self.target_for(src, src.degree + 1)
        return matrix_of(self.B_tensor, src, tgt)

    # -- homology ---------------------------------------------------------
    def hh(self, k: int, w: int, cls: Optional[int] = None, sector: Optional[tuple] = None) -> int:
        """dim HH_k at weight w (graded models), summed over sectors unless one is given."""
        if self.filtered:
            raise ValueError("use spectral.hh_filtered for filtered models")
        if k < 0:
            return 0
        secs = [sector] if sector is not None else sorted(
            set(self.sectors(k, w, cls)))
        total = 0
        for s in secs:
            mid = self.slice(k, w, cls, s)
            if not mid.dim:
                continue
            up = self.slice(k + 1, w, cls, s)
            low = self.slice(k - 1, w, cls, s)
            d_out = self.b_matrix(mid, low)
            d_in = self.b_matrix(up, mid)
            total += homology_dim(d_in, d_out)
        return total

    def total_complex(self, k: int, w: int, cls=None, sector=None):
        """Matrix D_k : Tot_k -> Tot_{k-1} of the (b, B) bicomplex, with block sizes."""
        def parts(n):
            return [self.slice(n - 2 * j, w, cls, sector) for j in range(n // 2 + 1)] if n >= 0 else []
        src, tgt = parts(k), parts(k - 1)
        blocks = []
        for r in tgt:
            row = []
            for c in src:
                if c.degree == r.degree + 1:
                    row.append(self.b_matrix(c, r))
                elif c.degree == r.degree - 1:
                    row.append(self.B_matrix(c, r))
                else:
                    row.append(None)
            blocks.append(row)
        return block_matrix(blocks, [len(r) for r in tgt], [len(c) for c in src]), src, tgt

    def hc(self, k: int, w: int, cls=None, sector=None) -> int:
        if self.filtered:
            raise ValueError("use spectral.hc_filtered for filtered models")
        if k < 0:
            return 0
        secs = [sector] if sector is not None else sorted(
            set().union(*[set(self.sectors(k - 2 * j, w, cls)) for j in range(k // 2 + 1)]))
        total = 0
        for s in secs:
            d_k, src, _ = self.total_complex(k, w, cls, s)
            d_up, _, _ = self.total_complex(k + 1, w, cls, s)
            total += homology_dim(d_up, d_k)
        return total

    def hp(self, k: int, w: int, cls=None, max_shift: int = 3):
        """HC_{k+2m} for growing m; returns (value, stabilized flag)."""
        vals = [self.hc(k + 2 * m, w, cls) for m in range(max_shift + 1)]
        stable = len(vals) >= 2 and vals[-1] == vals[-2]
        return vals[-1], stable, vals


# ---------------------------------------------------------------------------
# twisted complexes


class TwistedModel:
    """The complex (C(A)_h, b_h) for a group element h acting on the base A."""

    def __init__(self, base: Algebra, action: LinearAction, h: int, normalized: bool = True):
        self.base = base
        self.action = action
        self.group = action.group
        self.h = h
        self.normalized = normalized
        self.unit = base.unit
        self._buckets: Dict[Tuple[int, int], Dict] = {}
        self._slices: Dict[tuple, ChainSlice] = {}
        g = self.group
        self.centralizer = sorted(k for k in range(g.order) if g.mul(k, h) == g.mul(h, k))

    def buckets(self, k, w):
        key = (k, w)
        if key not in self._buckets:
            base = self.base
            out = defaultdict(list)
            lo = base.min_weight
            cache = {}
            for comp in compositions(w - (k + 1) * lo, k + 1):
                comp = tuple(c + lo for c in comp)
                lists = []
                for d in comp:
                    if d not in cache:
                        cache[d] = base.basis_of_weight(d)
                    lists.append(cache[d])
                for labs in itertools.product(*lists):
                    if self.normalized and self.unit in labs[1:]:
                        continue
                    sec = base.zero_sector()
                    for a in labs:
                        sec = base.add_sectors(sec, base.sector(a))
                    out[sec].append(tuple(labs))
            self._buckets[key] = dict(out)
        return self._buckets[key]

    def slice(self, k, w, sector=None) -> ChainSlice:
        key = (k, w, sector)
        s = self._slices.get(key)
        if s is None:
            basis = []
            if k >= 0:
                for sec, ts in sorted(self.buckets(k, w).items()):
                    if sector is None or sec == sector:
                        basis.extend(ts)
            s = ChainSlice(k, w, ("twisted", self.h), sector, basis)
            self._slices[key] = s
        return s

    def sectors(self, k, w):
        return sorted(self.buckets(k, w))

    def bh_tensor(self, t: Tensor) -> Chain:
        n = len(t) - 1
        out: Chain = {}
        if n == 0:
            return out
        base, unit, norm = self.base, self.unit, self.normalized
        # a_0 h(a_1) ⊗ a_2 ⊗ ... ⊗ a_n
        first = base.elt_mul({t[0]: 1}, self.action.act(self.h, t[1]))
        rest = t[2:]
        for p, c in first.items():
            key = (p,) + rest
            out[key] = out.get(key, 0) + c
        for i in range(1, n):
            sign = -1 if i % 2 else 1
            pre, post = t[:i], t[i + 2:]
            for p, c in base.mul(t[i], t[i + 1]).items():
                if norm and p == unit:
                    continue
                key = pre + (p,) + post
                out[key] = out.get(key, 0) + sign * c
        sign = -1 if n % 2 else 1
        mid = t[1:n]
        for p, c in base.mul(t[n], t[0]).items():
            key = (p,) + mid
            out[key] = out.get(key, 0) + sign * c
        return {key: v for key, v in out.items() if v}

    def cyclic_tensor(self, t: Tensor) -> Chain:
        """t_h(a_0 ⊗ ... ⊗ a_n) = a_n ⊗ h^{-1}(a_0) ⊗ a_1 ⊗ ... ⊗ a_{n-1}, no sign.

        Satisfies the cyclic face relations against b_h; t_h^{n+1} is the
        diagonal action of h^{-1}, so it is a genuine cyclic operator on the
        h-invariant chains (in particular on Γ_h-invariants)."""
        inv = self.group.inv(self.h)
        n = len(t) - 1
        if n == 0:
            return {t: 1}
        factors = [{t[n]: 1}, self.action.act(inv, t[0])] + [{a: 1} for a in t[1:n]]
        out = _expand(factors)
        return _drop_degenerate(out, self.unit) if self.normalized else out

    def Bh_tensor(self, t: Tensor) -> Chain:
        """Twisted Connes operator sum_j (-1)^{nj} s t_h^j(a); a mixed complex on invariants.

        s = t_h s_n is the extra degeneracy 1 ⊗ h^{-1}(x_0) ⊗ x_1 ⊗ ... ."""
        if not self.normalized:
            raise ValueError("the twisted Connes operator is implemented on normalized chains only")
        n = len(t) - 1
        if t[0] == self.unit:
            return {}
        out: Chain = {}
        cur: Chain = {t: 1}
        inv = self.group.inv(self.h)
        for j in range(n + 1):
            s = -1 if (n * j) % 2 else 1
            for key, c in cur.items():
                # extra degeneracy t_h s_n: 1 ⊗ h^{-1}(x_0) ⊗ x_1 ⊗ ..., so that d_0 s = id
                for a, x in self.action.act(inv, key[0]).items():
                    if a == self.unit and self.normalized:
                        continue
                    k2 = (self.unit, a) + key[1:]
                    out[k2] = out.get(k2, 0) + s * c * x
            if j < n:
                nxt: Chain = {}
                for key, c in cur.items():
                    vec_add(nxt, self.cyclic_tensor(key), c)
                cur = nxt
        return {key: v for key, v in out.items() if v}

    def bh_matrix(self, src: ChainSlice, tgt: ChainSlice = None) -> SparseMatrix:
        if tgt is None:
            tgt = self.slice(src.degree - 1, src.weight, src.sector)
        return matrix_of(self.bh_tensor, src, tgt)

    def act_tensor(self, g: int, t: Tensor) -> Chain:
        out = _expand([self.action.act(g, a) for a in t])
        return _drop_degenerate(out, self.unit) if self.normalized else out

    def action_matrix(self, g: int, sl: ChainSlice) -> SparseMatrix:
        return matrix_of(lambda t: self.act_tensor(g, t), sl, sl)

    def projector(self, sl: ChainSlice) -> SparseMatrix:
        from .groups import average_projector
        return average_projector(self.group, self.centralizer, lambda g: self.action_matrix(g, sl))

    def homology(self, k, w, sector=None) -> int:
        secs = [sector] if sector is not None else self.sectors(k, w)
        total = 0
        for s in secs:
            mid = self.slice(k, w, s)
            d_out = self.bh_matrix(mid, self.slice(k - 1, w, s))
            d_in = self.bh_matrix(self.slice(k + 1, w, s), mid)
            total += homology_dim(d_in, d_out)
        return total

    def invariant_homology(self, k, w, sector=None) -> int:
        """dim of Γ_h-invariant twisted homology: rk P_k - rk(b_h P_k) - rk(b_h P_{k+1})."""
        secs = [sector] if sector is not None else self.sectors(k, w)
        total = 0
        for s in secs:
            mid = self.slice(k, w, s)
            if not mid.dim:
                continue
            up = self.slice(k + 1, w, s)
            p_k = self.projector(mid)
            p_up = self.projector(up)
            d_out = self.bh_matrix(mid, self.slice(k - 1, w, s))
            d_in = self.bh_matrix(up, mid)
            total += rank(p_k) - rank(d_out @ p_k) - rank(d_in @ p_up)
        return total


# ---------------------------------------------------------------------------
# the quasi-isomorphisms F and G


def map_F_tensor(model: HochschildModel, h: int, t: Tensor) -> Chain:
    """F(a_0, ..., a_n) = (a_0 h, a_1 e, ..., a_n e)."""
    e = model.group.identity_index
    return {((t[0], h),) + tuple((a, e) for a in t[1:]): 1}


def map_G_tensor(model: HochschildModel, tw: TwistedModel, t: Tensor) -> Chain:
    """Averaged formula for G on the <h> component, h = tw.h the class representative.

    G(b_0 h_0, ..., b_n h_n) = (1/|Γ_h|) sum over g_0 with g_0 γ' g_0^{-1} = h of
        (h g_0 h_0^{-1}(b_0), g_0(b_1), g_0 h_1(b_2), ..., g_0 h_1 ... h_{n-1}(b_n)),
    where γ' = h_1 ... h_n h_0.  When γ' = h the sum runs over Γ_h.
    """
    G = model.group
    h = tw.h
    hs = [f[1] for f in t]
    gp = G.mul(G.product(hs[1:]), hs[0])
    S = [k for k in range(G.order) if G.conj(k, gp) == h]
    if not S:
        raise WrongComponent(f"tensor {t} is not in the component of {h}")
    weight = Fraction(1, len(tw.centralizer))
    act = tw.action.act
    out: Chain = {}
    h0inv = G.inv(hs[0])
    for g0 in S:
        elems = [G.mul(G.mul(h, g0), h0inv)]
        run = g0
        for i in range(1, len(t)):
            elems.append(run)
            run = G.mul(run, hs[i])
        factors = [act(g, f[0]) for g, f in zip(elems, t)]
        vec_add(out, _expand(factors), weight)
    return _drop_degenerate(out, tw.unit) if tw.normalized else out


def map_F_matrix(model: HochschildModel, tw: TwistedModel, src: ChainSlice, tgt: ChainSlice):
    return matrix_of(lambda t: map_F_tensor(model, tw.h, t), src, tgt)


def map_G_matrix(model: HochschildModel, tw: TwistedModel, src: ChainSlice, tgt: ChainSlice):
    return matrix_of(lambda t: map_G_tensor(model, tw, t), src, tgt)


def twisted_for_class(model: HochschildModel, cls: int) -> TwistedModel:
    rep = model.classes[cls].representative
    return TwistedModel(model.base, model.B.action, rep, model.normalized)


# thin functional wrappers matching the operation names used in reports

def hochschild_b(model: HochschildModel, sl: ChainSlice) -> SparseMatrix:
    return model.b_matrix(sl)


def connes_B(model: HochschildModel, sl: ChainSlice) -> SparseMatrix:
    return model.B_matrix(sl)


def twisted_b(tw: TwistedModel, sl: ChainSlice) -> SparseMatrix:
    return tw.bh_matrix(sl)


def hh(algebra, k, w, cls=None):
    return HochschildModel(algebra).hh(k, w, cls)


def hc(algebra, k, w, cls=None):
    return HochschildModel(algebra).hc(k, w, cls)
