"""Measures on the state object and probabilistic truth values.

mu_rho(S)(V) = tr(rho P_{S_V}) is an order-reversing function V -> [0,1].  The
l map turns such a function gamma into a sieve on the product poset
V(H) x (0,1)_L rooted at <V,r>, encoded exactly by the cutoff
V' -> min(r, gamma(V')).  A pair <V',r'> is a member iff r' <= cutoff(V').
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from . import linalg as la
from ._parallel import pmap
from .contexts import ContextPoset
from .dasein import DaseinisedProposition, dasein_proj_global
from .errors import BadThreshold, IllDefined, PosetMismatch, ValidationError
from .presheaf import ClopenSubobject
from .truth import truth_object, truth_value_truthobject

_0 = Fraction(0)
_1 = Fraction(1)


def _threshold(r) -> Fraction:
    r = Fraction(r.strip()) if isinstance(r, str) else Fraction(r)
    if not (0 < r <= 1):
        raise BadThreshold("threshold must lie in (0, 1]; r = 0 is excluded", r=r)
    return r


class OrderReversingWeight:
    """gamma: V -> [0,1] with V' <= V implying gamma(V') >= gamma(V)."""

    __slots__ = ("poset", "values")

    def __init__(self, poset: ContextPoset, values, validate: bool = True):
        self.poset = poset
        self.values = tuple(Fraction(v) for v in values)
        if len(self.values) != len(poset):
            raise PosetMismatch("weight does not cover the poset")
        if validate:
            bad = self.first_violation()
            if bad is not None:
                raise ValidationError("weight is not an order-reversing map into [0,1]", context=bad)

    def first_violation(self):
        p = self.poset
        for i, x in enumerate(self.values):
            if not (0 <= x <= 1):
                return p.contexts[i].label
            for j in p.down[i]:
                if self.values[j] < x:
                    return p.contexts[j].label
        return None

    def at(self, v) -> Fraction:
        return self.values[self.poset.index(v)]

    def join(self, other) -> "OrderReversingWeight":
        if other.poset is not self.poset:
            raise PosetMismatch("weights live on different posets")
        return OrderReversingWeight(self.poset, [max(a, b) for a, b in zip(self.values, other.values)], False)

    def __eq__(self, other):
        return isinstance(other, OrderReversingWeight) and other.poset is self.poset and other.values == self.values

    def __hash__(self):
        return hash(self.values)

    def to_json(self):
        return {c.label: str(self.values[i]) for i, c in enumerate(self.poset.contexts)}

    def __repr__(self):
        return f"OrderReversingWeight({self.to_json()})"


class Measure:
    """mu_rho with the atom traces tr(rho a) precomputed per context."""

    def __init__(self, rho: la.Operator, poset: ContextPoset):
        if rho.kind != "density":
            raise ValidationError("measures need a certified density matrix")
        self.rho = rho
        self.poset = poset
        self.atom_traces = tuple(pmap(lambda c: tuple(la.expectation(rho, a) for a in c.atoms), poset.contexts))

    def __call__(self, s: ClopenSubobject) -> OrderReversingWeight:
        if s.poset is not self.poset:
            raise PosetMismatch("sub-object lives on a different poset")
        vals = [sum((w[k] for k in sel), _0) for w, sel in zip(self.atom_traces, s.sel)]
        return OrderReversingWeight(self.poset, vals)


def measure(rho: la.Operator, s: ClopenSubobject) -> OrderReversingWeight:
    return Measure(rho, s.poset)(s)


class AxiomReport:
    def __init__(self):
        self.failures = []
        self.checked = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, law, **witness):
        self.failures.append({"law": law, **{k: str(v) for k, v in witness.items()}})

    def to_json(self):
        return {"ok": self.ok, "checked": self.checked, "failures": self.failures}


def check_measure_axioms(mu, samples, poset: ContextPoset) -> AxiomReport:
    """Check mu(Sigma) = 1, mu(0) = 0, order reversal and the modular law
    mu(S v T) + mu(S ^ T) = mu(S) + mu(T) over all sample pairs."""
    rep = AxiomReport()
    full = mu(ClopenSubobject.full(poset))
    if any(v != 1 for v in full.values):
        rep.fail("mu(Sigma) = 1")
    empty = mu(ClopenSubobject.empty(poset))
    if any(v != 0 for v in empty.values):
        rep.fail("mu(0) = 0")
    samples = list(samples)
    cache = {}

    def m(s):
        w = cache.get(s)
        if w is None:
            w = mu(s)
            cache[s] = w
        return w

    for s in samples:
        bad = m(s).first_violation()
        if bad is not None:
            rep.fail("order-reversing", context=bad)
    for a in range(len(samples)):
        for b in range(a, len(samples)):
            s, t = samples[a], samples[b]
            lhs = [x + y for x, y in zip(m(s | t).values, m(s & t).values)]
            rhs = [x + y for x, y in zip(m(s).values, m(t).values)]
            rep.checked += 1
            if lhs != rhs:
                k = next(i for i in range(len(lhs)) if lhs[i] != rhs[i])
                rep.fail("modular law", pair=(a, b), context=poset.contexts[k].label)
            if not any((s & t).sel):
                sums = [x + y for x, y in zip(m(s).values, m(t).values)]
                if m(s | t).values != tuple(sums):
                    rep.fail("finite additivity", pair=(a, b))
    return rep


def _generated(poset: ContextPoset, i: int, atoms) -> ClopenSubobject:
    """Smallest clopen sub-object whose component at context i contains ``atoms``."""
    sel = [set() for _ in poset.contexts]
    for j in poset.down[i]:
        r = poset._res[(i, j)]
        sel[j].update(r[k] for k in atoms)
    return ClopenSubobject(poset, sel, validate=False)


def extract_state_weights(mu, poset: ContextPoset) -> dict:
    """m(P) := mu(S_P)(V) for every projection P of every context.

    Two sub-objects with component P at V are used (delta(P) and the
    sub-object generated by P at V); all contexts containing P must agree,
    otherwise IllDefined.  Finite additivity is then checked per context.
    """
    m = {}
    seen_at = {}
    for i, c in enumerate(poset.contexts):
        for k in range(c.size + 1):
            for atoms in combinations(range(c.size), k):
                proj = c.projector(atoms)
                vals = {mu(_generated(poset, i, atoms)).values[i]}
                if atoms:
                    vals.add(mu(dasein_proj_global(proj, poset).subobject).values[i])
                else:
                    vals.add(mu(ClopenSubobject.empty(poset)).values[i])
                if len(vals) != 1:
                    raise IllDefined("sub-objects with the same component disagree", context=c.label)
                val = vals.pop()
                if proj in m and m[proj] != val:
                    raise IllDefined("contexts sharing a projector disagree",
                                     first=seen_at[proj], second=c.label)
                m.setdefault(proj, val)
                seen_at.setdefault(proj, c.label)
    for c in poset.contexts:
        n = c.size
        for k in range(1, n + 1):
            for a in combinations(range(n), k):
                rest = [x for x in range(n) if x not in a]
                for kb in range(1, len(rest) + 1):
                    for b in combinations(rest, kb):
                        pa, pb = c.projector(a), c.projector(b)
                        if m[c.projector(a + b)] != m[pa] + m[pb]:
                            raise IllDefined("m is not finitely additive", context=c.label)
    return m


# ---------------------------------------------------------------- product poset

class ProductSieve:
    """Sieve on <V,r> in V(H) x (0,1)_L: {<V',r'> | V' <= V, 0 < r' <= cutoff(V')}."""

    __slots__ = ("poset", "root", "r", "cutoff")

    def __init__(self, poset: ContextPoset, root, r, cutoff, validate: bool = True):
        self.poset = poset
        self.root = poset.index(root)
        self.r = _threshold(r)
        self.cutoff = {poset.index(k): Fraction(v) for k, v in dict(cutoff).items()}
        if validate:
            if set(self.cutoff) != set(poset.down[self.root]):
                raise ValidationError("cutoff must be defined exactly on the down-set of the root")
            for i, x in self.cutoff.items():
                if not (0 <= x <= self.r):
                    raise ValidationError("cutoff outside [0, r]", context=poset.contexts[i].label)
                for j in poset.down[i]:
                    if self.cutoff[j] < x:
                        raise ValidationError("cutoff is not order-reversing", context=poset.contexts[j].label)

    def contains(self, v, r) -> bool:
        i = self.poset.index(v)
        r = Fraction(r)
        return i in self.cutoff and 0 < r <= self.cutoff[i]

    def is_empty(self) -> bool:
        return all(x == 0 for x in self.cutoff.values())

    def join(self, other) -> "ProductSieve":
        if other.poset is not self.poset or other.root != self.root or other.r != self.r:
            raise PosetMismatch("product sieves have different roots")
        cut = {i: max(x, other.cutoff[i]) for i, x in self.cutoff.items()}
        return ProductSieve(self.poset, self.root, self.r, cut, validate=False)

    def restrict(self, v, r) -> "ProductSieve":
        """Pullback to <V',r'> <= <V,r>."""
        i = self.poset.index(v)
        r = _threshold(r)
        if i not in self.cutoff or r > self.r:
            raise ValidationError("restriction target is not below the root")
        cut = {j: min(r, self.cutoff[j]) for j in self.poset.down[i]}
        return ProductSieve(self.poset, i, r, cut, validate=False)

    def __eq__(self, other):
        return (isinstance(other, ProductSieve) and other.poset is self.poset and other.root == self.root
                and other.r == self.r and other.cutoff == self.cutoff)

    def __hash__(self):
        return hash((self.root, self.r, tuple(sorted(self.cutoff.items()))))

    def to_json(self):
        p = self.poset
        return {
            "root": {"context": p.contexts[self.root].label, "r": str(self.r)},
            "cutoff": {p.contexts[i].label: str(self.cutoff[i]) for i in sorted(self.cutoff)},
        }

    def __repr__(self):
        return f"ProductSieve({self.to_json()})"


def l_map(gamma: OrderReversingWeight, root) -> ProductSieve:
    """l(gamma)<V,r> = {<V',r'> <= <V,r> | gamma(V') >= r'}."""
    v, r = root
    p = gamma.poset
    i = p.index(v)
    r = _threshold(r)
    cut = {j: min(r, gamma.values[j]) for j in p.down[i]}
    return ProductSieve(p, i, r, cut)


def truth_value_probabilistic(prop: DaseinisedProposition, rho: la.Operator, root) -> ProductSieve:
    """{<V',r'> <= <V,r> | tr(rho delta(P)_V') >= r'}, checked against l o mu_rho."""
    v, r = root
    p = prop.poset
    i = p.index(v)
    r = _threshold(r)
    cut = {j: min(r, la.expectation(rho, prop.projectors[j])) for j in p.down[i]}
    direct = ProductSieve(p, i, r, cut)
    via_l = l_map(measure(rho, prop.subobject), (i, r))
    if direct != via_l:
        raise IllDefined("probabilistic truth value differs from l o mu", context=p.contexts[i].label)
    return direct


def l_separation_witness(g1: OrderReversingWeight, g2: OrderReversingWeight):
    """A root <V,1> where l(g1) and l(g2) differ, or None if g1 == g2."""
    for i in range(len(g1.poset)):
        if l_map(g1, (i, 1)) != l_map(g2, (i, 1)):
            return g1.poset.contexts[i].label
    return None


def all_projections(poset: ContextPoset) -> list:
    """Every projection appearing in some context, deduplicated, in first-seen order."""
    seen = {}
    for c in poset.contexts:
        for k in range(c.size + 1):
            for atoms in combinations(range(c.size), k):
                proj = c.projector(atoms)
                seen.setdefault(proj, proj)
    return list(seen)


def truth_separation_witnesses(rho1, rho2, poset: ContextPoset, r) -> list:
    """(projection index, context label) pairs where the threshold-r truth values
    of the two density matrices differ."""
    t1 = truth_object(rho1, poset, r)
    t2 = truth_object(rho2, poset, r)
    out = []
    for n, proj in enumerate(all_projections(poset)):
        prop = dasein_proj_global(proj, poset)
        for c in poset.contexts:
            if truth_value_truthobject(prop, t1, c) != truth_value_truthobject(prop, t2, c):
                out.append((n, c.label))
    return out
