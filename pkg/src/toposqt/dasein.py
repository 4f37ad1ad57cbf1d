"""Inner and outer daseinisation of projectors and self-adjoint operators.

For a projector P and context V:
    outer  delta^o(P)_V = sum of atoms a with aP != 0  (least projection of V above P)
    inner  delta^i(P)_V = sum of atoms a with a <= P   (greatest projection of V below P)

A self-adjoint A is daseinised through its spectral family.  Outer
daseinisation uses the family lambda -> delta^i(E_lambda)_V and inner
daseinisation uses lambda -> delta^o(E_lambda)_V.  With a discrete spectrum the
infimum over mu > lambda in the inner formula equals the value at lambda,
because E is constant on [lambda_k, lambda_{k+1}).  Each Stieltjes integral then
becomes sum lambda_k (F_k - F_{k-1}).
"""

from __future__ import annotations

from fractions import Fraction

from . import linalg as la
from ._parallel import pmap
from .contexts import Context, ContextPoset
from .errors import DimensionMismatch, NotInAlgebra, NotSubcontext
from .presheaf import ClopenSubobject, SpectralPoint


def _dims(p, v):
    if p.dim != v.dim:
        raise DimensionMismatch("operator and context dims differ", operator=p.dim, context=v.dim)


def dasein_outer_proj(p: la.Operator, v: Context) -> la.Operator:
    _dims(p, v)
    return v.projector(v.atoms_meeting(p))


def dasein_inner_proj(p: la.Operator, v: Context) -> la.Operator:
    _dims(p, v)
    return v.projector(v.atoms_below(p))


class DaseinisedProposition:
    """delta(P) on a poset: the outer projector per context and its clopen sub-object."""

    __slots__ = ("source", "poset", "projectors", "subobject")

    def __init__(self, source, poset, projectors, subobject):
        self.source = source
        self.poset = poset
        self.projectors = tuple(projectors)
        self.subobject = subobject

    def at(self, v) -> la.Operator:
        return self.projectors[self.poset.index(v)]

    def atoms_at(self, v) -> frozenset:
        return self.subobject.at(v)

    def to_json(self):
        return {
            "source": self.source.to_json(),
            "per_context": {c.label: self.projectors[i].to_json() for i, c in enumerate(self.poset.contexts)},
            "subobject": self.subobject.to_json(),
        }


def dasein_proj_global(p: la.Operator, poset: ContextPoset) -> DaseinisedProposition:
    _dims(p, poset.contexts[0])
    sel = pmap(lambda c: c.atoms_meeting(p), poset.contexts)
    sub = ClopenSubobject(poset, sel)
    projs = [c.projector(s) for c, s in zip(poset.contexts, sel)]
    return DaseinisedProposition(p, poset, projs, sub)


def dasein_negation_check(p: la.Operator, v: Context) -> tuple:
    """(delta^o(1 - P)_V, 1 - delta^i(P)_V); the two always agree."""
    one = la.identity(p.dim)
    left = dasein_outer_proj((one - p).with_kind("projector"), v)
    right = (one - dasein_inner_proj(p, v)).with_kind("projector")
    return left, right


# ---------------------------------------------------------------- self-adjoint

def _family(a: la.Operator) -> la.SpectralFamily:
    return la.spectral_family(la.resolved(a).resolution)


def outer_values(a: la.Operator, v: Context) -> tuple:
    """Eigenvalue of delta^o(A)_V on each atom of V."""
    _dims(a, v)
    vals = [None] * v.size
    prev = frozenset()
    for lam, e in _family(a).breakpoints:
        cur = v.atoms_below(e)
        for k in cur - prev:
            vals[k] = lam
        prev = cur
    return tuple(vals)


def inner_values(a: la.Operator, v: Context) -> tuple:
    """Eigenvalue of delta^i(A)_V on each atom of V."""
    _dims(a, v)
    vals = [None] * v.size
    prev = frozenset()
    for lam, e in _family(a).breakpoints:
        cur = v.atoms_meeting(e)
        for k in cur - prev:
            vals[k] = lam
        prev = cur
    return tuple(vals)


def operator_from_values(v: Context, vals) -> la.Operator:
    """sum vals[k] atom_k with its spectral resolution attached."""
    groups = {}
    for k, lam in enumerate(vals):
        groups.setdefault(Fraction(lam), []).append(k)
    pairs = [(lam, v.projector(ks)) for lam, ks in sorted(groups.items())]
    res = la.SpectralResolution(pairs)
    return v.operator(vals).with_kind("hermitian").with_resolution(res)


def dasein_outer_sa(a: la.Operator, v: Context) -> la.Operator:
    return operator_from_values(v, outer_values(a, v))


def dasein_inner_sa(a: la.Operator, v: Context) -> la.Operator:
    return operator_from_values(v, inner_values(a, v))


def dasein_sa_global(a: la.Operator, poset: ContextPoset, inner: bool = False) -> list:
    fn = dasein_inner_sa if inner else dasein_outer_sa
    a = la.resolved(a)
    return pmap(lambda c: fn(a, c), poset.contexts)


# ---------------------------------------------------------------- R-arrow values

class ValueInterval:
    """Pair (mu, nu) on the down-set of a context: mu order-preserving, nu
    order-reversing, mu <= nu."""

    __slots__ = ("poset", "root", "mu", "nu")

    def __init__(self, poset, root, mu, nu):
        self.poset = poset
        self.root = poset.index(root)
        self.mu = dict(mu)
        self.nu = dict(nu)

    def at(self, v) -> tuple:
        i = self.poset.index(v)
        return self.mu[i], self.nu[i]

    def is_valid(self) -> bool:
        p = self.poset
        for i in self.mu:
            if self.mu[i] > self.nu[i]:
                return False
            for j in p.down[i]:
                if self.mu[j] > self.mu[i] or self.nu[j] < self.nu[i]:
                    return False
        return True

    def to_json(self):
        p = self.poset
        return {p.contexts[i].label: [str(self.mu[i]), str(self.nu[i])] for i in sorted(self.mu)}


def breve_delta(a: la.Operator, point: SpectralPoint, poset: ContextPoset) -> ValueInterval:
    """The value interval of A at a spectral point: over every V' below the
    point's context, (lambda|V'(delta^i(A)_V'), lambda|V'(delta^o(A)_V'))."""
    a = la.resolved(a)
    root = poset.index(point.context)
    mu, nu = {}, {}
    for j in sorted(poset.down[root]):
        c = poset.contexts[j]
        r = poset._res[(root, j)][point.index]
        mu[j] = inner_values(a, c)[r]
        nu[j] = outer_values(a, c)[r]
    return ValueInterval(poset, root, mu, nu)


def de_groote_map(a: la.Operator, v, target, poset: ContextPoset, inner: bool = False) -> la.Operator:
    """Restriction of the outer (or inner) de Groote presheaf along target <= v."""
    src, dst = poset.get(v), poset.get(target)
    if not poset.leq(dst, src):
        raise NotSubcontext("target is not below the source", source=src.label, target=dst.label)
    if src.coefficients(a) is None:
        raise NotInAlgebra("operator is not in the source context", context=src.label)
    return dasein_inner_sa(a, dst) if inner else dasein_outer_sa(a, dst)
