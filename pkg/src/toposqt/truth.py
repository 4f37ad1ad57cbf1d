"""Pseudo-states, truth objects and sieve-valued truth values.

Two routes produce the truth value of delta(P) at V:

* pseudo-state: {V' <= V | w^psi_V' <= delta^o(P)_V'}
* truth object: {V' <= V | delta^o(P)_V' in T_V'}, with T_V' the projections of
  V' whose expectation in the state is 1 (pure) or at least r (mixed).

For pure states with r = 1 they agree everywhere; the tests check this.
"""

from __future__ import annotations

import os
from fractions import Fraction
from itertools import combinations

from . import linalg as la
from ._parallel import pmap
from .contexts import ContextPoset, apply_unitary
from .dasein import DaseinisedProposition, dasein_proj_global
from .errors import BadThreshold, PosetMismatch, ValidationError
from .presheaf import GlobalOmegaElement, Sieve

MAX_ATOMS = 6


def _debug() -> bool:
    return bool(os.environ.get("TOPOSQT_DEBUG"))


class PseudoState:
    """w^psi = delta(|psi><psi|): the smallest clopen sub-object totally true in psi."""

    __slots__ = ("psi", "poset", "dasein")

    def __init__(self, psi, poset, dasein):
        self.psi = psi
        self.poset = poset
        self.dasein = dasein

    @property
    def subobject(self):
        return self.dasein.subobject

    def at(self, v) -> la.Operator:
        return self.dasein.at(v)

    def to_json(self):
        return {
            "state": [x.to_json() for x in self.psi],
            "per_context": {c.label: self.dasein.projectors[i].to_json()
                            for i, c in enumerate(self.poset.contexts)},
            "subobject": self.subobject.to_json(),
        }


def pseudo_state(psi, poset: ContextPoset) -> PseudoState:
    psi = la.ket(psi)
    proj = la.rank_one(psi)
    return PseudoState(psi, poset, dasein_proj_global(proj, poset))


def _threshold(r) -> Fraction:
    r = Fraction(r) if not isinstance(r, str) else Fraction(r.strip())
    if not (0 < r <= 1):
        raise BadThreshold("threshold must lie in (0, 1]", r=r)
    return r


def _subsets(n):
    for k in range(n + 1):
        for c in combinations(range(n), k):
            yield frozenset(c)


class TruthObject:
    """T^psi or T^{rho,r}: per context, the projections of P(V) meeting the
    defining inequality, stored as atom-index sets."""

    __slots__ = ("kind", "state", "r", "poset", "membership", "weights")

    def __init__(self, kind, state, r, poset, membership, weights):
        self.kind = kind
        self.state = state
        self.r = r
        self.poset = poset
        self.membership = tuple(membership)
        self.weights = tuple(weights)

    def members_at(self, v) -> frozenset:
        return self.membership[self.poset.index(v)]

    def projectors_at(self, v) -> list:
        c = self.poset.get(v)
        return [c.projector(s) for s in sorted(self.members_at(c), key=lambda s: (len(s), sorted(s)))]

    def contains(self, v, atoms) -> bool:
        return frozenset(atoms) in self.members_at(v)

    def expectation(self, v, atoms) -> Fraction:
        w = self.weights[self.poset.index(v)]
        return sum((w[k] for k in atoms), Fraction(0))


def atom_weights(state, v) -> tuple:
    """Expectation of each atom of V in a unit vector or density."""
    return tuple(la.expectation(state, a) for a in v.atoms)


def truth_object(state, poset: ContextPoset, r=None) -> TruthObject:
    """Pure truth object for a vector, mixed (threshold r, default 1) for a density."""
    if isinstance(state, la.Operator):
        if state.kind != "density":
            raise ValidationError("mixed truth objects need a certified density matrix")
        kind = "mixed"
        rr = _threshold(1 if r is None else r)
    else:
        state = la.ket(state)
        la.require_unit(state)
        kind = "pure"
        rr = _threshold(1 if r is None else r)
    for c in poset.contexts:
        if c.size > MAX_ATOMS:
            raise ValidationError("context has too many atoms to materialise P(V)", context=c.label, atoms=c.size)
    weights = pmap(lambda c: atom_weights(state, c), poset.contexts)
    membership = []
    for c, w in zip(poset.contexts, weights):
        keep = set()
        for s in _subsets(c.size):
            if sum((w[k] for k in s), Fraction(0)) >= rr:
                keep.add(s)
        membership.append(frozenset(keep))
    return TruthObject(kind, state, rr, poset, membership, weights)


def _check_poset(a, b):
    if a is not b:
        raise PosetMismatch("objects live on different posets")


def truth_value_pseudostate(prop: DaseinisedProposition, w: PseudoState, v) -> Sieve:
    _check_poset(prop.poset, w.poset)
    p = prop.poset
    root = p.index(v)
    members = [j for j in p.down[root] if w.subobject.sel[j] <= prop.subobject.sel[j]]
    if _debug():
        for j in p.down[root]:
            val = la.expectation(w.psi, prop.projectors[j])
            assert (val == 1) == (j in members), p.contexts[j].label
    return Sieve(p, root, members)


def truth_value_truthobject(prop: DaseinisedProposition, t: TruthObject, v) -> Sieve:
    _check_poset(prop.poset, t.poset)
    p = prop.poset
    root = p.index(v)
    members = [j for j in p.down[root] if prop.subobject.sel[j] in t.membership[j]]
    return Sieve(p, root, members)


class TruthValue:
    """A global element of Omega: one sieve per context."""

    __slots__ = ("proposition", "state_ref", "global_")

    def __init__(self, proposition, state_ref, global_):
        self.proposition = proposition
        self.state_ref = state_ref
        self.global_ = global_

    def at(self, v) -> Sieve:
        return self.global_.at(v)

    @property
    def poset(self):
        return self.global_.poset

    def totally_true(self) -> bool:
        return all(self.global_.sieves[m].is_principal() for m in self.poset.maximal)

    def totally_false(self) -> bool:
        return all(self.global_.sieves[m].is_empty() for m in self.poset.maximal)

    def to_json(self):
        return {
            "sieves": self.global_.to_json(),
            "totally_true": self.totally_true(),
            "totally_false": self.totally_false(),
        }


def truth_value(prop: DaseinisedProposition, state_ref) -> TruthValue:
    """Global truth value from a PseudoState or a TruthObject."""
    if isinstance(state_ref, PseudoState):
        fn = lambda c: truth_value_pseudostate(prop, state_ref, c)  # noqa: E731
    else:
        fn = lambda c: truth_value_truthobject(prop, state_ref, c)  # noqa: E731
    g = GlobalOmegaElement.from_map(prop.poset, fn)
    return TruthValue(prop, state_ref, g)


def image_sieve(s: Sieve, mapping: dict) -> Sieve:
    """l_U applied to a sieve: relabel every member through the context map."""
    p = s.poset
    return Sieve(p, mapping[p.contexts[s.root]], [mapping[p.contexts[m]] for m in s.members])


def covariance_report(p_proj: la.Operator, psi, u: la.Operator, poset: ContextPoset) -> list:
    """For every context V: (l_U(v(delta P in T^psi)_V), v(delta(UPU*) in T^{U psi})_{l_U V})."""
    mapping = apply_unitary(poset, u)
    psi = la.ket(psi)
    left_prop = dasein_proj_global(p_proj, poset)
    left_t = truth_object(psi, poset)
    right_prop = dasein_proj_global(la.conjugate(u, p_proj), poset)
    right_t = truth_object(u.apply(psi), poset)
    out = []
    for c in poset.contexts:
        left = image_sieve(truth_value_truthobject(left_prop, left_t, c), mapping)
        right = truth_value_truthobject(right_prop, right_t, mapping[c])
        out.append((left, right))
    return out


def covariance_check(prop, psi, u: la.Operator, v, poset: ContextPoset | None = None) -> tuple:
    """Both sides of the Dirac covariance identity at one context."""
    if isinstance(prop, DaseinisedProposition):
        poset = prop.poset
        prop = prop.source
    if poset is None:
        raise ValidationError("a poset is required when prop is a bare projector")
    i = poset.index(v)
    return covariance_report(prop, psi, u, poset)[i]
