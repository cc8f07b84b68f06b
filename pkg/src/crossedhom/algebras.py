"""Concrete algebras, linear group actions and crossed products.

Every algebra exposes the same small protocol:

* ``unit``                  label of 1
* ``weight(a)``             weight (graded) or filtration degree (filtered)
* ``basis_of_weight(w)``    sorted list of labels of weight exactly w
* ``mul(a, b)``             dict label -> coefficient, memoized
* ``sector(a)``             an extra additive grading used to split slices
* ``graded``                True when weight(ab) = weight(a) + weight(b)

Elements are plain dicts ``label -> coefficient``.
"""

from __future__ import annotations

import itertools
import threading
from fractions import Fraction
from math import comb, factorial
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from .errors import ActionInvalid, BadWindow, NotElliptic
from .groups import FiniteMatrixGroup, Matrix, mat_inverse, trivial_group
from .linalg import SparseMatrix, solve, vec_add

Label = Hashable
Element = Dict[Label, object]


def compositions(total: int, parts: int, minimum: int = 0):
    """All tuples of ``parts`` integers >= minimum summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        if total >= minimum:
            yield (total,)
        return
    for first in range(minimum, total - minimum * (parts - 1) + 1):
        for rest in compositions(total - first, parts - 1, minimum):
            yield (first,) + rest


def exponent_vectors(n: int, degree: int, bounds: Optional[Sequence[int]] = None):
    """Exponent vectors of total degree ``degree`` in n variables, lex-descending order."""
    if n == 0:
        if degree == 0:
            yield ()
        return
    top = degree if bounds is None else min(degree, bounds[0])
    for first in range(top, -1, -1):
        for rest in exponent_vectors(n - 1, degree - first, None if bounds is None else bounds[1:]):
            yield (first,) + rest


class Algebra:
    name = "algebra"
    graded = True
    commutative = False
    unit: Label = None
    sector_moduli: Tuple[int, ...] = ()
    min_weight = 0

    def __init__(self):
        self._memo: Dict[Tuple[Label, Label], Element] = {}
        self._lock = threading.Lock()

    # protocol -----------------------------------------------------------
    def weight(self, a: Label) -> int:
        raise NotImplementedError

    def basis_of_weight(self, w: int) -> List[Label]:
        raise NotImplementedError

    def _mul(self, a: Label, b: Label) -> Element:
        raise NotImplementedError

    def sector(self, a: Label) -> tuple:
        return ()

    def describe(self) -> dict:
        return {"name": self.name}

    # shared machinery ---------------------------------------------------
    def mul(self, a: Label, b: Label) -> Element:
        key = (a, b)
        r = self._memo.get(key)
        if r is None:
            r = self._mul(a, b)
            # values are deterministic, so a racing duplicate insert is harmless;
            # the lock only keeps the dict consistent for free-threaded builds
            with self._lock:
                self._memo[key] = r
        return r

    def add_sectors(self, s: tuple, t: tuple) -> tuple:
        return tuple((x + y) % m if m else x + y for x, y, m in zip(s, t, self.sector_moduli))

    def zero_sector(self) -> tuple:
        return tuple(0 for _ in self.sector_moduli)

    def basis_up_to(self, lo: int, hi: int) -> List[Label]:
        out = []
        for w in range(lo, hi + 1):
            out.extend(self.basis_of_weight(w))
        return out

    def elt_mul(self, u: Element, v: Element) -> Element:
        out: Element = {}
        for a, x in u.items():
            for b, y in v.items():
                vec_add(out, self.mul(a, b), x * y)
        return out

    def check_associativity(self, max_weight: int, min_weight: int = None, labels=None):
        """First failing triple (a, b, c, difference) within the window, or None."""
        lo = self.min_weight if min_weight is None else min_weight
        if labels is None:
            labels = self.basis_up_to(lo, max_weight)
        for a in labels:
            for b in labels:
                for c in labels:
                    if self.graded and self.weight(a) + self.weight(b) + self.weight(c) > max_weight:
                        continue
                    left = self.elt_mul(self.mul(a, b), {c: 1})
                    right = self.elt_mul({a: 1}, self.mul(b, c))
                    diff = dict(left)
                    vec_add(diff, right, -1)
                    if diff:
                        return (a, b, c, diff)
        return None

    def check_unit(self, labels) -> Optional[Label]:
        for a in labels:
            if self.mul(self.unit, a) != {a: 1} or self.mul(a, self.unit) != {a: 1}:
                return a
        return None

    def check_weight_law(self, labels) -> Optional[tuple]:
        for a in labels:
            for b in labels:
                s = self.weight(a) + self.weight(b)
                for c in self.mul(a, b):
                    wc = self.weight(c)
                    if (self.graded and wc != s) or (not self.graded and wc > s):
                        return (a, b, c)
        return None


# ---------------------------------------------------------------------------
# commutative polynomial models

class PolynomialAlgebra(Algebra):
    """Q[X_1..X_n] or its truncation X_i^{bounds_i + 1} = 0; labels are exponent tuples."""

    commutative = True

    def __init__(self, n: int, bounds: Optional[Sequence[int]] = None, sector: Optional[str] = None):
        super().__init__()
        if n < 0:
            raise ValueError("n must be nonnegative")
        self.n = n
        self.bounds = None if bounds is None else tuple(bounds)
        self.unit = (0,) * n
        self.sector_kind = sector
        if sector == "multidegree":
            self.sector_moduli = (0,) * n
        elif sector is None:
            self.sector_moduli = ()
        else:
            raise ValueError(f"unknown sector grading {sector!r}")
        self.name = "polynomial" if bounds is None else "truncated_polynomial"

    def weight(self, a):
        return sum(a)

    def sector(self, a):
        return a if self.sector_kind == "multidegree" else ()

    def basis_of_weight(self, w):
        if w < 0:
            return []
        return list(exponent_vectors(self.n, w, self.bounds))

    def _mul(self, a, b):
        c = tuple(x + y for x, y in zip(a, b))
        if self.bounds is not None and any(e > m for e, m in zip(c, self.bounds)):
            return {}
        return {c: 1}

    def variable(self, i):
        return tuple(int(j == i) for j in range(self.n))

    def max_weight(self):
        return None if self.bounds is None else sum(self.bounds)

    def describe(self):
        d = {"name": self.name, "n": self.n}
        if self.bounds is not None:
            d["bounds"] = list(self.bounds)
        if self.sector_kind:
            d["sector"] = self.sector_kind
        return d


def polynomial_algebra(n: int, sector: Optional[str] = None) -> PolynomialAlgebra:
    return PolynomialAlgebra(n, sector=sector)


def truncated_polynomial(n: int, order: int, sector: Optional[str] = None) -> PolynomialAlgebra:
    """Q[X_1..X_n]/(X_i^order)."""
    if order < 1:
        raise ValueError("order must be positive")
    return PolynomialAlgebra(n, bounds=[order - 1] * n, sector=sector)


# ---------------------------------------------------------------------------
# Weyl algebra with the Bernstein filtration

class WeylAlgebra(Algebra):
    """Generators x_1..x_n, xi_1..xi_n with xi_i x_i - x_i xi_i = 1.

    Labels are normal-ordered exponent tuples (alpha_1..alpha_n, beta_1..beta_n)
    standing for x^alpha xi^beta.  Filtration degree is |alpha| + |beta|.
    """

    graded = False

    def __init__(self, n: int, sector: Optional[str] = "charge"):
        super().__init__()
        if n < 1:
            raise ValueError("n must be at least 1")
        self.n = n
        self.unit = (0,) * (2 * n)
        self.sector_kind = sector
        if sector == "charge":
            self.sector_moduli = (0,) * n
        elif sector == "parity":
            self.sector_moduli = (2,)
        elif sector is None:
            self.sector_moduli = ()
        else:
            raise ValueError(f"unknown sector grading {sector!r}")
        self.name = "weyl"

    def weight(self, a):
        return sum(a)

    def sector(self, a):
        n = self.n
        if self.sector_kind == "charge":
            return tuple(a[i] - a[n + i] for i in range(n))
        if self.sector_kind == "parity":
            return (sum(a) % 2,)
        return ()

    def basis_of_weight(self, w):
        if w < 0:
            return []
        return list(exponent_vectors(2 * self.n, w))

    def _mul(self, a, b):
        n = self.n
        # x^al xi^be * x^ga xi^de: move xi_i^be_i past x_i^ga_i independently per i
        per = []
        for i in range(n):
            be, ga = a[n + i], b[i]
            per.append([(k, factorial(k) * comb(be, k) * comb(ga, k)) for k in range(min(be, ga) + 1)])
        out = {}
        for choice in itertools.product(*per):
            coeff = 1
            for _, c in choice:
                coeff *= c
            xs = tuple(a[i] + b[i] - choice[i][0] for i in range(n))
            ks = tuple(a[n + i] + b[n + i] - choice[i][0] for i in range(n))
            lab = xs + ks
            out[lab] = out.get(lab, 0) + coeff
        return out

    def commutator_matrix(self):
        """C[a][b] with [X_a, X_b] = C[a][b] for the generators (x's then xi's)."""
        n = self.n
        c = [[Fraction(0)] * (2 * n) for _ in range(2 * n)]
        for i in range(n):
            c[n + i][i] = Fraction(1)   # [xi_i, x_i] = 1
            c[i][n + i] = Fraction(-1)
        return c

    def variable(self, i):
        return tuple(int(j == i) for j in range(2 * self.n))

    def describe(self):
        d = {"name": "weyl", "n": self.n}
        if self.sector_kind:
            d["sector"] = self.sector_kind
        return d


def weyl_algebra(n: int, sector: Optional[str] = "charge") -> WeylAlgebra:
    return WeylAlgebra(n, sector)


# ---------------------------------------------------------------------------
# Laurent-truncated symbol model on the circle

def _gen_binom(j: int, k: int) -> int:
    """binomial(j, k) for any integer j and k >= 0."""
    num = 1
    for i in range(k):
        num *= (j - i)
    return num // factorial(k)


class SymbolModel(Algebra):
    """Symbols sum_j a_j(t) xi^j on the circle, modulo xi-degrees below ``low``.

    Labels are (m, j, e): t^m xi^j eps^e, where eps (eps^2 = 1, central) is the
    sign of xi, separating the two half-lines of the cosphere.  The product is

        a # b = sum_k (1/k!) d_xi^k a * D^k b,     D = t d/dt,

    truncated below xi-degree ``low``.  D is the derivative along the circle
    written in the Fourier variable t = e^{i theta} (the factor i is absorbed).
    The quotient is an algebra on F_0 / F_{low-1}; positive-degree factors can
    lift truncated terms back above ``low``.
    """

    graded = False
    commutative = False

    def __init__(self, fourier_cutoff: int, window: Tuple[int, int], sheets: int = 2):
        super().__init__()
        low, high = window
        if low > high:
            raise BadWindow(f"window low={low} exceeds high={high}")
        if not low <= 0 <= high:
            raise BadWindow("window must contain 0")
        if sheets not in (1, 2):
            raise ValueError("sheets must be 1 or 2")
        self.cutoff = fourier_cutoff
        self.low, self.high = low, high
        self.sheets = sheets
        self.unit = (0, 0, 0)
        self.min_weight = low
        self.sector_moduli = (0,)
        self.name = "symbol_model"

    def weight(self, a):
        return a[1]

    def sector(self, a):
        return (a[0],)

    def basis_of_weight(self, w):
        if not self.low <= w <= self.high:
            return []
        return [(m, w, e) for m in range(-self.cutoff, self.cutoff + 1) for e in range(self.sheets)]

    def _mul(self, a, b):
        m, j, e = a
        m2, j2, e2 = b
        out = {}
        k = 0
        while True:
            deg = j + j2 - k
            if deg < self.low:
                break
            c = _gen_binom(j, k) * m2 ** k
            if j >= 0 and k > j:
                break
            if c:
                out[(m + m2, deg, (e + e2) % 2)] = c
            k += 1
        return out

    def describe(self):
        return {"name": "symbol_model", "fourier_cutoff": self.cutoff,
                "window": [self.low, self.high], "sheets": self.sheets}


def symbol_model(fourier_cutoff: int, window: Tuple[int, int], sheets: int = 2) -> SymbolModel:
    return SymbolModel(fourier_cutoff, window, sheets)


# ---------------------------------------------------------------------------
# explicit structure tables (custom algebras from the CLI)

class TableAlgebra(Algebra):
    def __init__(self, labels: Sequence[str], weights: Sequence[int], unit: str,
                 table: Dict[Tuple[str, str], Element], graded: bool = True, commutative: bool = False):
        super().__init__()
        self.labels = list(labels)
        self.weights = dict(zip(labels, weights))
        self.unit = unit
        self.table = table
        self.graded = graded
        self.commutative = commutative
        self.name = "table"
        self.min_weight = min(weights) if weights else 0

    def weight(self, a):
        return self.weights[a]

    def basis_of_weight(self, w):
        return sorted(a for a in self.labels if self.weights[a] == w)

    def _mul(self, a, b):
        if a == self.unit:
            return {b: 1}
        if b == self.unit:
            return {a: 1}
        return dict(self.table.get((a, b), {}))

    def describe(self):
        return {"name": "table", "labels": self.labels,
                "weights": [self.weights[a] for a in self.labels], "unit": self.unit,
                "table": sorted([list(k), sorted((c, str(v)) for c, v in val.items())]
                                for k, val in self.table.items())}


# ---------------------------------------------------------------------------
# linear group actions

class LinearAction:
    """Gamma acting on the generators X_i by g.X_i = sum_j (g^{-1})_{ij} X_j.

    This is pullback along the inverse matrix, a left action.  Monomials are
    mapped by substituting into the normal-ordered product, so the same code
    serves commutative and Weyl bases.  The symbol model and table algebras
    only carry the trivial action.
    """

    def __init__(self, group: FiniteMatrixGroup, algebra: Algebra):
        self.group = group
        self.algebra = algebra
        self._memo: Dict[Tuple[int, Label], Element] = {}
        self._lock = threading.Lock()
        if group.is_trivial():
            self._gens = None
            return
        if isinstance(algebra, PolynomialAlgebra):
            nvars = algebra.n
        elif isinstance(algebra, WeylAlgebra):
            nvars = 2 * algebra.n
        else:
            raise ActionInvalid(f"no linear action of a nontrivial group on {algebra.name}")
        if group.dim != nvars:
            raise ActionInvalid(f"group acts on Q^{group.dim} but the algebra has {nvars} generators")
        self._gens = {}
        for g in range(group.order):
            inv = mat_inverse(group.matrix(g))
            images = []
            for i in range(nvars):
                images.append({_unit_vec(j, nvars): _num(inv[i][j]) for j in range(nvars) if inv[i][j] != 0})
            self._gens[g] = images

    def act(self, g: int, a: Label) -> Element:
        if self._gens is None or g == self.group.identity_index:
            return {a: 1}
        key = (g, a)
        r = self._memo.get(key)
        if r is None:
            alg = self.algebra
            r = {alg.unit: 1}
            for i, e in enumerate(a):
                for _ in range(e):
                    r = alg.elt_mul(r, self._gens[g][i])
            with self._lock:
                self._memo[key] = r
        return r

    def act_elt(self, g: int, u: Element) -> Element:
        out: Element = {}
        for a, x in u.items():
            vec_add(out, self.act(g, a), x)
        return out

    def check(self, max_weight: int) -> Optional[str]:
        """Return a description of the first violated axiom, or None."""
        alg, grp = self.algebra, self.group
        labels = alg.basis_up_to(alg.min_weight, max_weight)
        for g in range(grp.order):
            for a in labels:
                img = self.act(g, a)
                for c in img:
                    wa, wc = alg.weight(a), alg.weight(c)
                    if (alg.graded and wc != wa) or (not alg.graded and wc > wa):
                        return f"element {g} does not preserve the weight of {a}"
                    if alg.sector(c) != alg.sector(a):
                        return f"element {g} moves {a} out of its sector"
            for a in labels:
                for b in labels:
                    if alg.weight(a) + alg.weight(b) > max_weight:
                        continue
                    left = self.act_elt(g, alg.mul(a, b))
                    right = alg.elt_mul(self.act(g, a), self.act(g, b))
                    if left != right:
                        return f"element {g} is not multiplicative on ({a}, {b})"
        gens = range(grp.order) if grp.order <= 8 else _generators(grp)
        for g in gens:
            for h in gens:
                gh = grp.mul(g, h)
                for a in labels:
                    if self.act_elt(g, self.act(h, a)) != self.act(gh, a):
                        return f"action is not a homomorphism on ({g}, {h})"
        return None


def _num(x):
    return x.numerator if x.denominator == 1 else x


def _unit_vec(j, n):
    return tuple(int(i == j) for i in range(n))


def _generators(grp):
    from .groups import generating_subset
    return generating_subset(grp, range(grp.order))


# ---------------------------------------------------------------------------
# crossed products

class CrossedProduct(Algebra):
    """A ⋊ Γ with labels (a, g) and (a g)(b h) = a g(b) gh."""

    def __init__(self, base: Algebra, action: LinearAction):
        super().__init__()
        self.base = base
        self.action = action
        self.group = action.group
        self.graded = base.graded
        self.commutative = base.commutative and self.group.is_trivial()
        self.unit = (base.unit, self.group.identity_index)
        self.sector_moduli = base.sector_moduli
        self.min_weight = base.min_weight
        self.name = f"{base.name}⋊Γ" if not self.group.is_trivial() else base.name

    def weight(self, a):
        return self.base.weight(a[0])

    def sector(self, a):
        return self.base.sector(a[0])

    def basis_of_weight(self, w):
        return [(a, g) for a in self.base.basis_of_weight(w) for g in range(self.group.order)]

    def _mul(self, x, y):
        (a, g), (b, h) = x, y
        gh = self.group.mul(g, h)
        out = {}
        gb = self.action.act(g, b)
        for c, coeff in gb.items():
            for d, c2 in self.base.mul(a, c).items():
                key = (d, gh)
                val = out.get(key, 0) + coeff * c2
                if val:
                    out[key] = val
                else:
                    out.pop(key, None)
        return out

    def check_law(self, max_weight: int) -> Optional[tuple]:
        """Recompute (a g)(b h) from the definition on all pairs in the window."""
        base = self.base
        labels = base.basis_up_to(base.min_weight, max_weight)
        for a in labels:
            for b in labels:
                if base.weight(a) + base.weight(b) > max_weight:
                    continue
                for g in range(self.group.order):
                    for h in range(self.group.order):
                        expect = {}
                        for c, x in base.elt_mul({a: 1}, self.action.act(g, b)).items():
                            expect[(c, self.group.mul(g, h))] = x
                        if self.mul((a, g), (b, h)) != expect:
                            return ((a, g), (b, h))
        return None

    def describe(self):
        return {"base": self.base.describe(), "group": self.group.describe()}


def crossed_product(base: Algebra, action: LinearAction = None, check_weight: int = 3) -> CrossedProduct:
    if action is None:
        action = LinearAction(trivial_group(_default_dim(base)), base)
    problem = action.check(check_weight) if not action.group.is_trivial() else None
    if problem:
        raise ActionInvalid(problem)
    return CrossedProduct(base, action)


def _default_dim(base):
    if isinstance(base, PolynomialAlgebra):
        return max(base.n, 1)
    if isinstance(base, WeylAlgebra):
        return 2 * base.n
    return 1


def as_crossed(alg) -> CrossedProduct:
    """View any algebra as a crossed product (by the trivial group if needed)."""
    if isinstance(alg, CrossedProduct):
        return alg
    return crossed_product(alg)


# ---------------------------------------------------------------------------
# associated graded

class AssociatedGraded(Algebra):
    """Gr(F) = ⊕ F_p/F_{p-1}; product = top-degree part of the filtered product."""

    graded = True

    def __init__(self, filtered: Algebra):
        super().__init__()
        self.filtered = filtered
        self.unit = filtered.unit
        self.sector_moduli = filtered.sector_moduli
        self.min_weight = filtered.min_weight
        self.commutative = isinstance(filtered, (WeylAlgebra, SymbolModel))
        self.name = f"gr({filtered.name})"

    def weight(self, a):
        return self.filtered.weight(a)

    def sector(self, a):
        return self.filtered.sector(a)

    def basis_of_weight(self, w):
        return self.filtered.basis_of_weight(w)

    def _mul(self, a, b):
        top = self.filtered.weight(a) + self.filtered.weight(b)
        return {c: v for c, v in self.filtered.mul(a, b).items() if self.filtered.weight(c) == top}

    def describe(self):
        return {"gr": self.filtered.describe()}


class GradedAction:
    """Leading-term action on Gr induced by a filtration-preserving action."""

    def __init__(self, action: LinearAction, gr: AssociatedGraded):
        self.group = action.group
        self.inner = action
        self.algebra = gr

    def act(self, g, a):
        w = self.inner.algebra.weight(a)
        return {c: v for c, v in self.inner.act(g, a).items() if self.inner.algebra.weight(c) == w}

    def act_elt(self, g, u):
        out = {}
        for a, x in u.items():
            vec_add(out, self.act(g, a), x)
        return out

    def check(self, max_weight):
        return None


def associated_graded(f: Algebra):
    """Gr of a filtered algebra or crossed product (group factors have weight 0)."""
    if isinstance(f, CrossedProduct):
        gr = AssociatedGraded(f.base)
        return CrossedProduct(gr, GradedAction(f.action, gr))
    return AssociatedGraded(f)


def weyl_gr_isomorphism(weyl: WeylAlgebra, max_weight: int):
    """Explicit isomorphism Gr(weyl(n)) -> polynomial_algebra(2n), verified on products.

    The map sends the class of x^alpha xi^beta to X^alpha Xi^beta (the same
    exponent tuple).  Returns (polynomial algebra, label map, first failure or None).
    """
    gr = AssociatedGraded(weyl)
    poly = PolynomialAlgebra(2 * weyl.n)
    labels = gr.basis_up_to(0, max_weight)
    failure = None
    for a in labels:
        for b in labels:
            if gr.weight(a) + gr.weight(b) > max_weight:
                continue
            if gr.mul(a, b) != poly.mul(a, b):
                failure = (a, b)
                break
        if failure:
            break
    return poly, (lambda lab: lab), failure


# ---------------------------------------------------------------------------
# elliptic elements

class Splitting:
    """Linear section F_n/F_{n-1} -> F_n, [a p^n] -> a p^n."""

    def __init__(self, algebra: Algebra, p: Element, powers: Dict[int, Element]):
        self.algebra = algebra
        self.p = p
        self.powers = powers

    def __call__(self, n: int, coeff: Element) -> Element:
        """Lift the class of coeff * [p^n]; coeff is a degree-0 element."""
        return self.algebra.elt_mul(coeff, self.powers[n])


def declare_elliptic(f: Algebra, p: Element, search_degree: int = None) -> Splitting:
    """Validate Axiom-4 style conditions for p and return the induced splitting."""
    if isinstance(f, WeylAlgebra):
        raise NotElliptic("the Weyl algebra has no invertible element of filtration degree 1; "
                          "its splitting is the normal-ordered section")
    if not p:
        raise NotElliptic("p = 0")
    if max(f.weight(a) for a in p) > 1:
        raise NotElliptic("p does not lie in F_1")
    if not isinstance(f, SymbolModel):
        raise NotElliptic(f"no elliptic test implemented for {f.name}")
    # inverse: solve p # q = 1 with q supported in the window on the t-modes of p
    reach = max(abs(a[0]) for a in p)
    cands = [a for a in f.basis_up_to(f.low, f.high) if abs(a[0]) <= reach]
    targets = {}
    cols = []
    for a in cands:
        prod = f.elt_mul(p, {a: 1})
        cols.append(prod)
        for c in prod:
            targets.setdefault(c, len(targets))
    targets.setdefault(f.unit, len(targets))
    m = SparseMatrix(len(targets), len(cands), [{targets[c]: v for c, v in col.items()} for col in cols])
    sol = solve(m, {targets[f.unit]: 1})
    if sol is None:
        raise NotElliptic("p is not invertible in the working quotient")
    q = {cands[i]: v for i, v in sol.items()}
    left = f.elt_mul(q, p)
    if left != {f.unit: 1}:
        raise NotElliptic("p has a right inverse that is not a left inverse")
    powers = {0: {f.unit: 1}}
    for n in range(1, f.high + 1):
        powers[n] = f.elt_mul(powers[n - 1], p)
    for n in range(-1, f.low - 1, -1):
        powers[n] = f.elt_mul(powers[n + 1], q)
    for n, pw in powers.items():
        top = max((f.weight(a) for a in pw), default=None)
        if top is None or top > n:
            raise NotElliptic(f"p^{n} does not lie in F_{n}")
        if top < n:
            raise NotElliptic(f"degenerate splitting: p^{n} lies in F_{n - 1}")
    return Splitting(f, p, powers)
