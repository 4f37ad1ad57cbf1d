"""The spectral presheaf, its clopen sub-objects, sieves and Omega.

Over a finite poset the Gel'fand spectrum of a context is its set of atoms, and
restricting a point to V' <= V picks the unique atom of V' above it.  Sub-objects
and sieves are stored explicitly, one frozenset per context.
"""

from __future__ import annotations

import random
from typing import Callable, NamedTuple

from . import linalg as la
from ._parallel import pmap
from .contexts import Context, ContextPoset
from .errors import (
    IncompatibleSubobject,
    NotInAlgebra,
    NotSubcontext,
    PosetMismatch,
    RootMismatch,
)


class SpectralPoint(NamedTuple):
    context: Context
    index: int

    @property
    def atom(self) -> la.Operator:
        return self.context.atoms[self.index]


def spectrum(v: Context) -> tuple:
    return tuple(SpectralPoint(v, i) for i in range(v.size))


def restrict_point(p: SpectralPoint, target: Context, poset: ContextPoset | None = None) -> SpectralPoint:
    """lambda |_{V'}: the atom of V' dominating p's atom."""
    if poset is not None:
        return SpectralPoint(target, poset.restriction(p.context, target)[p.index])
    a = p.atom
    hits = [k for k, b in enumerate(target.atoms) if la.dominated(a, b)]
    if len(hits) != 1:
        raise NotSubcontext("target is not a sub-context", source=p.context.label, target=target.label)
    # every atom of the source must sit under some atom of the target
    for src in p.context.atoms:
        if not any(la.dominated(src, b) for b in target.atoms):
            raise NotSubcontext("target is not a sub-context", source=p.context.label, target=target.label)
    return SpectralPoint(target, hits[0])


def evaluate_point(p: SpectralPoint, proj: la.Operator) -> int:
    """lambda(P) for P in P(V): 1 iff the point's atom lies under P."""
    if not p.context.contains_projector(proj):
        raise NotInAlgebra("projector is not in the point's context", context=p.context.label)
    return 1 if la.dominated(p.atom, proj) else 0


# ---------------------------------------------------------------- sub-objects

class ClopenSubobject:
    """S subset Sigma: a set of atom indices per context, closed under restriction."""

    __slots__ = ("poset", "sel")

    def __init__(self, poset: ContextPoset, sel, validate: bool = True):
        self.poset = poset
        self.sel = tuple(frozenset(s) for s in sel)
        if len(self.sel) != len(poset):
            raise PosetMismatch("selection does not cover the poset")
        if validate:
            bad = self.first_violation()
            if bad is not None:
                v, w, k = bad
                raise IncompatibleSubobject("restriction leaves the sub-object", source=v, target=w, atom=k)

    @classmethod
    def from_map(cls, poset: ContextPoset, fn: Callable[[Context], frozenset]) -> "ClopenSubobject":
        return cls(poset, [fn(c) for c in poset.contexts])

    @classmethod
    def full(cls, poset) -> "ClopenSubobject":
        return cls(poset, [range(c.size) for c in poset.contexts], validate=False)

    @classmethod
    def empty(cls, poset) -> "ClopenSubobject":
        return cls(poset, [() for _ in poset.contexts], validate=False)

    def first_violation(self):
        p = self.poset
        for i, s in enumerate(self.sel):
            for j in p.down[i]:
                r = p._res[(i, j)]
                for k in s:
                    if r[k] not in self.sel[j]:
                        return (p.contexts[i].label, p.contexts[j].label, k)
        return None

    def at(self, v) -> frozenset:
        return self.sel[self.poset.index(v)]

    def projector(self, v) -> la.Operator:
        c = self.poset.get(v)
        return c.projector(self.at(c))

    def _same(self, other):
        if other.poset is not self.poset:
            raise PosetMismatch("sub-objects live on different posets")

    def __eq__(self, other):
        return isinstance(other, ClopenSubobject) and other.poset is self.poset and other.sel == self.sel

    def __hash__(self):
        return hash(self.sel)

    def leq(self, other) -> bool:
        self._same(other)
        return all(a <= b for a, b in zip(self.sel, other.sel))

    def meet(self, other):
        self._same(other)
        return ClopenSubobject(self.poset, [a & b for a, b in zip(self.sel, other.sel)], validate=False)

    def join(self, other):
        self._same(other)
        return ClopenSubobject(self.poset, [a | b for a, b in zip(self.sel, other.sel)], validate=False)

    def implies(self, other):
        """(S => T)_V = points whose every restriction in S also lies in T."""
        self._same(other)
        p = self.poset
        out = []
        for i, c in enumerate(p.contexts):
            keep = set()
            for k in range(c.size):
                ok = True
                for j in p.down[i]:
                    r = p._res[(i, j)][k]
                    if r in self.sel[j] and r not in other.sel[j]:
                        ok = False
                        break
                if ok:
                    keep.add(k)
            out.append(keep)
        return ClopenSubobject(p, out, validate=False)

    def negation(self):
        return self.implies(ClopenSubobject.empty(self.poset))

    __and__ = meet
    __or__ = join
    __rshift__ = implies
    __invert__ = negation
    __le__ = leq

    def to_json(self):
        return {c.label: sorted(self.sel[i]) for i, c in enumerate(self.poset.contexts)}

    def __repr__(self):
        return f"ClopenSubobject({self.to_json()})"


def meet(s, t):
    return s.meet(t)


def join(s, t):
    return s.join(t)


def implies(s, t):
    return s.implies(t)


def negation(s):
    return s.negation()


def random_clopen(poset: ContextPoset, rng: random.Random, p: float = 0.3) -> ClopenSubobject:
    """Random atoms per context, then closed downward under restriction."""
    raw = [{k for k in range(c.size) if rng.random() < p} for c in poset.contexts]
    sel = [set(s) for s in raw]
    for i, s in enumerate(raw):
        for j in poset.down[i]:
            r = poset._res[(i, j)]
            sel[j].update(r[k] for k in s)
    return ClopenSubobject(poset, sel, validate=False)


# ---------------------------------------------------------------- sieves

class Sieve:
    """A downward-closed set of contexts below ``root``."""

    __slots__ = ("poset", "root", "members")

    def __init__(self, poset: ContextPoset, root, members, validate: bool = True):
        self.poset = poset
        self.root = poset.index(root)
        self.members = frozenset(poset.index(m) for m in members)
        if validate:
            if not self.members <= poset.down[self.root]:
                raise NotSubcontext("sieve member is not below the root", root=poset.contexts[self.root].label)
            for m in self.members:
                if not poset.down[m] <= self.members:
                    raise ValueError(f"sieve is not downward closed at {poset.contexts[m].label}")

    @classmethod
    def principal(cls, poset, root) -> "Sieve":
        r = poset.index(root)
        return cls(poset, r, poset.down[r], validate=False)

    @classmethod
    def empty(cls, poset, root) -> "Sieve":
        return cls(poset, root, (), validate=False)

    @classmethod
    def generated(cls, poset, root, gens) -> "Sieve":
        """Smallest sieve on root containing the given contexts."""
        r = poset.index(root)
        mem = set()
        for g in gens:
            mem |= poset.down[poset.index(g)]
        return cls(poset, r, mem & poset.down[r])

    def _same(self, other):
        if other.poset is not self.poset:
            raise PosetMismatch("sieves live on different posets")
        if other.root != self.root:
            raise RootMismatch("sieves have different roots",
                               left=self.poset.contexts[self.root].label,
                               right=self.poset.contexts[other.root].label)

    def __eq__(self, other):
        return (isinstance(other, Sieve) and other.poset is self.poset
                and other.root == self.root and other.members == self.members)

    def __hash__(self):
        return hash((self.root, self.members))

    def __contains__(self, v):
        return self.poset.index(v) in self.members

    def __len__(self):
        return len(self.members)

    def is_principal(self) -> bool:
        return self.members == self.poset.down[self.root]

    def is_empty(self) -> bool:
        return not self.members

    def leq(self, other) -> bool:
        self._same(other)
        return self.members <= other.members

    def meet(self, other):
        self._same(other)
        return Sieve(self.poset, self.root, self.members & other.members, validate=False)

    def join(self, other):
        self._same(other)
        return Sieve(self.poset, self.root, self.members | other.members, validate=False)

    def implies(self, other):
        """{V' <= root | for all V'' <= V': V'' in a implies V'' in b}."""
        self._same(other)
        p = self.poset
        bad = self.members - other.members
        keep = [v for v in p.down[self.root] if not (p.down[v] & bad)]
        return Sieve(p, self.root, keep, validate=False)

    def negation(self):
        return self.implies(Sieve.empty(self.poset, self.root))

    __and__ = meet
    __or__ = join
    __rshift__ = implies
    __invert__ = negation
    __le__ = leq

    def labels(self) -> list:
        return [self.poset.contexts[i].label for i in sorted(self.members)]

    def to_json(self):
        return {"root": self.poset.contexts[self.root].label, "members": self.labels()}

    def to_dot(self) -> str:
        return self.poset.to_dot(highlight=self.members)

    def __repr__(self):
        return f"Sieve({self.to_json()})"


def sieve_meet(a, b):
    return a.meet(b)


def sieve_join(a, b):
    return a.join(b)


def sieve_implies(a, b):
    return a.implies(b)


def sieve_not(a):
    return a.negation()


def omega_restrict(s: Sieve, target) -> Sieve:
    """Pullback of a sieve on V to V' <= V: {V'' <= V' | V'' in S}."""
    p = s.poset
    t = p.index(target)
    if t not in p.down[s.root]:
        raise NotSubcontext("restriction target is not below the root",
                            root=p.contexts[s.root].label, target=p.contexts[t].label)
    return Sieve(p, t, s.members & p.down[t], validate=False)


def random_sieve(poset: ContextPoset, root, rng: random.Random, p: float = 0.3) -> Sieve:
    r = poset.index(root)
    gens = [v for v in sorted(poset.down[r]) if rng.random() < p]
    return Sieve.generated(poset, r, gens)


class GlobalOmegaElement:
    """A compatible family of sieves, one rooted at each context."""

    __slots__ = ("poset", "sieves")

    def __init__(self, poset: ContextPoset, sieves, validate: bool = True):
        self.poset = poset
        self.sieves = tuple(sieves)
        if validate:
            bad = self.first_violation()
            if bad is not None:
                raise ValueError(f"sieves are not compatible: {bad[0]} -> {bad[1]}")

    @classmethod
    def from_map(cls, poset, fn) -> "GlobalOmegaElement":
        return cls(poset, pmap(fn, poset.contexts))

    def first_violation(self):
        p = self.poset
        for i, s in enumerate(self.sieves):
            if s.root != i:
                return (p.contexts[i].label, "root")
            for j in p.down[i]:
                if self.sieves[j].members != s.members & p.down[j]:
                    return (p.contexts[i].label, p.contexts[j].label)
        return None

    def at(self, v) -> Sieve:
        return self.sieves[self.poset.index(v)]

    def __eq__(self, other):
        return isinstance(other, GlobalOmegaElement) and self.sieves == other.sieves

    def __hash__(self):
        return hash(self.sieves)

    def to_json(self):
        return {c.label: self.sieves[i].labels() for i, c in enumerate(self.poset.contexts)}


# ---------------------------------------------------------------- global sections

def _section_search(poset: ContextPoset, first_choices=None):
    """Backtrack over maximal contexts; yields point-index tuples per context."""
    maxi = list(poset.maximal)
    n = len(poset)
    assign = [None] * n
    count = [0] * n
    results = []

    def place(m, k):
        touched = []
        for j in poset.down[m]:
            r = poset._res[(m, j)][k]
            if assign[j] is None:
                assign[j] = r
                count[j] = 1
                touched.append(j)
            elif assign[j] != r:
                for t in touched:
                    count[t] -= 1
                    if count[t] == 0:
                        assign[t] = None
                return None
            else:
                count[j] += 1
                touched.append(j)
        return touched

    def undo(touched):
        for t in touched:
            count[t] -= 1
            if count[t] == 0:
                assign[t] = None

    def rec(pos):
        if pos == len(maxi):
            results.append(tuple(assign))
            return
        m = maxi[pos]
        choices = range(poset.contexts[m].size)
        if pos == 0 and first_choices is not None:
            choices = first_choices
        for k in choices:
            touched = place(m, k)
            if touched is None:
                continue
            rec(pos + 1)
            undo(touched)

    rec(0)
    return results


def global_section_indices(poset: ContextPoset) -> list:
    """All global sections as tuples of atom indices, in lexicographic order of
    the choices at maximal contexts."""
    if not poset.maximal:
        return []
    first = poset.contexts[poset.maximal[0]].size
    parts = pmap(lambda k: _section_search(poset, [k]), range(first))
    return [s for part in parts for s in part]


def global_sections_sigma(poset: ContextPoset) -> list:
    out = []
    for sec in global_section_indices(poset):
        out.append({c: SpectralPoint(c, sec[i]) for i, c in enumerate(poset.contexts)})
    return out


def is_global_section(poset: ContextPoset, sec) -> bool:
    """Check a point-index tuple commutes with every restriction map."""
    for i in range(len(poset)):
        for j in poset.down[i]:
            if poset._res[(i, j)][sec[i]] != sec[j]:
                return False
    return True
