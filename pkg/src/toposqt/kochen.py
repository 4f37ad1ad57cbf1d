"""Kochen-Specker colouring of basis systems and its link to global sections.

A {0,1}-colouring gives every ray one colour so that each basis has exactly
one ray coloured 1.  Kernaghan's 20-ray, 11-basis system in C^4 admits none:
every ray lies in an even number of bases, so summing the colours over all
bases gives an even number, yet each of the 11 bases contributes exactly 1.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import reduce
from math import gcd
from pathlib import Path

from . import linalg as la
from ._parallel import pmap
from .contexts import ContextPoset, generate_poset
from .errors import NotOrthogonal, ParseError, ValidationError

# Columns of the table, each listed top to bottom.
KERNAGHAN_COLUMNS = (
    ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)),
    ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 1), (0, 0, 1, -1)),
    ((1, 0, 0, 0), (0, 0, 1, 0), (0, 1, 0, 1), (0, 1, 0, -1)),
    ((1, 0, 0, 0), (0, 0, 0, 1), (0, 1, 1, 0), (0, 1, -1, 0)),
    ((-1, 1, 1, 1), (1, -1, 1, 1), (1, 1, -1, 1), (1, 1, 1, -1)),
    ((-1, 1, 1, 1), (1, 1, -1, 1), (1, 0, 1, 0), (0, 1, 0, -1)),
    ((1, -1, 1, 1), (1, 1, -1, 1), (0, 1, 1, 0), (1, 0, 0, -1)),
    ((1, 1, -1, 1), (1, 1, 1, -1), (0, 0, 1, 1), (1, -1, 0, 0)),
    ((0, 1, -1, 0), (1, 0, 0, -1), (1, 1, 1, 1), (1, -1, -1, 1)),
    ((0, 0, 1, -1), (1, -1, 0, 0), (1, 1, 1, 1), (1, 1, -1, -1)),
    ((1, 0, 1, 0), (0, 1, 0, 1), (1, 1, -1, -1), (1, -1, -1, 1)),
)


def canonical_ray(v) -> tuple:
    """Primitive integer representative with positive leading entry."""
    fr = [Fraction(x) for x in v]
    if not any(fr):
        raise ValidationError("zero vector is not a ray")
    den = reduce(lambda a, b: a * b // gcd(a, b), (x.denominator for x in fr), 1)
    ints = [int(x * den) for x in fr]
    g = reduce(gcd, (abs(x) for x in ints if x))
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(ints)


class BasisSystem:
    """Rays (canonical, sorted) and bases (tuples of ray indices, input order)."""

    __slots__ = ("dim", "rays", "bases", "_index")

    def __init__(self, dim, rays, bases):
        self.dim = dim
        self.rays = tuple(rays)
        self.bases = tuple(tuple(b) for b in bases)
        self._index = {r: i for i, r in enumerate(self.rays)}

    @classmethod
    def from_vectors(cls, bases) -> "BasisSystem":
        bases = [[canonical_ray(v) for v in b] for b in bases]
        if not bases:
            raise ValidationError("empty basis system")
        dim = len(bases[0][0])
        for n, b in enumerate(bases):
            if len(b) != dim or any(len(v) != dim for v in b):
                raise ValidationError("basis does not have dim vectors of length dim", basis=n + 1)
            for i in range(dim):
                for j in range(i + 1, dim):
                    if sum(x * y for x, y in zip(b[i], b[j])) != 0:
                        raise NotOrthogonal("basis vectors are not orthogonal", basis=n + 1,
                                            first=b[i], second=b[j])
            if len(set(b)) != dim:
                raise ValidationError("basis repeats a ray", basis=n + 1)
        rays = sorted({v for b in bases for v in b})
        idx = {r: i for i, r in enumerate(rays)}
        return cls(dim, rays, [tuple(idx[v] for v in b) for b in bases])

    def index(self, ray) -> int:
        return self._index[canonical_ray(ray)]

    def multiplicities(self) -> dict:
        m = {r: 0 for r in self.rays}
        for b in self.bases:
            for i in b:
                m[self.rays[i]] += 1
        return m

    def multiplicity_profile(self) -> dict:
        prof = {}
        for c in self.multiplicities().values():
            prof[c] = prof.get(c, 0) + 1
        return dict(sorted(prof.items()))

    def subsystem(self, basis_indices) -> "BasisSystem":
        return BasisSystem.from_vectors([[self.rays[i] for i in self.bases[k]] for k in basis_indices])

    def projector_seeds(self) -> list:
        return [[la.ray_projector(la.ket(self.rays[i])) for i in b] for b in self.bases]

    def to_json(self):
        return {
            "dim": self.dim,
            "rays": [list(r) for r in self.rays],
            "bases": [list(b) for b in self.bases],
        }


def kernaghan_system() -> BasisSystem:
    return BasisSystem.from_vectors(KERNAGHAN_COLUMNS)


# ---------------------------------------------------------------- colouring search

class _Search:
    def __init__(self, sys: BasisSystem):
        self.sys = sys
        self.n = len(sys.rays)
        self.of_ray = [[] for _ in range(self.n)]
        for k, b in enumerate(sys.bases):
            for i in b:
                self.of_ray[i].append(k)
        self.color = [None] * self.n
        self.nodes = 0

    def assign(self, ray, val, trail) -> bool:
        """Set a colour and unit-propagate through the bases; False on conflict."""
        stack = [(ray, val)]
        while stack:
            r, v = stack.pop()
            cur = self.color[r]
            if cur is not None:
                if cur != v:
                    return False
                continue
            self.color[r] = v
            trail.append(r)
            for k in self.of_ray[r]:
                ones = 0
                free = []
                for i in self.sys.bases[k]:
                    c = self.color[i]
                    if c is None:
                        free.append(i)
                    elif c == 1:
                        ones += 1
                if ones > 1:
                    return False
                if ones == 1:
                    stack.extend((i, 0) for i in free)
                elif not free:
                    return False
                elif len(free) == 1:
                    stack.append((free[0], 1))
        return True

    def undo(self, trail, mark):
        while len(trail) > mark:
            self.color[trail.pop()] = None

    def solve(self, prefix=(), count_all=False):
        """Lexicographically least colouring (0 before 1 in ray order), or the
        number of colourings when count_all is set."""
        trail = []
        for r, v in prefix:
            if not self.assign(r, v, trail):
                return 0 if count_all else None
        found = []
        total = [0]

        def rec():
            self.nodes += 1
            try:
                r = self.color.index(None)
            except ValueError:
                if count_all:
                    total[0] += 1
                    return False
                found.append(tuple(self.color))
                return True
            for v in (0, 1):
                mark = len(trail)
                if self.assign(r, v, trail) and rec():
                    return True
                self.undo(trail, mark)
            return False

        rec()
        if count_all:
            return total[0]
        return found[0] if found else None


class ColoringResult:
    __slots__ = ("system", "coloring", "certificate")

    def __init__(self, system, coloring, certificate):
        self.system = system
        self.coloring = coloring
        self.certificate = certificate

    @property
    def colorable(self) -> bool:
        return self.coloring is not None

    def to_json(self):
        out = {"result": "colorable" if self.colorable else "uncolorable",
               "rays": len(self.system.rays), "bases": len(self.system.bases)}
        if self.colorable:
            out["witness"] = {",".join(map(str, r)): self.coloring[r] for r in self.system.rays}
            out["white"] = [list(r) for r in self.system.rays if self.coloring[r] == 1]
        if self.certificate is not None:
            out["certificate"] = self.certificate
        return out


def parity_certificate(sys: BasisSystem):
    """Even-multiplicity certificate when it applies, else None."""
    mult = sys.multiplicities()
    if len(sys.bases) % 2 == 1 and all(c % 2 == 0 for c in mult.values()):
        return {
            "kind": "parity",
            "bases": len(sys.bases),
            "multiplicity_profile": {str(k): v for k, v in sys.multiplicity_profile().items()},
            "ray_multiplicities": {",".join(map(str, r)): c for r, c in sorted(mult.items())},
            "argument": ("each basis holds exactly one white ray, so the white count over all "
                         "bases equals the odd number of bases; every ray lies in an even "
                         "number of bases, so the same count is even"),
        }
    return None


def verify_parity_certificate(sys: BasisSystem, cert) -> bool:
    """Re-derive the parity contradiction from the system itself."""
    if cert is None or cert.get("kind") != "parity":
        return False
    if cert["bases"] != len(sys.bases) or len(sys.bases) % 2 == 0:
        return False
    mult = sys.multiplicities()
    claimed = cert["ray_multiplicities"]
    if {",".join(map(str, r)): c for r, c in mult.items()} != claimed:
        return False
    return all(c % 2 == 0 for c in mult.values())


def ks_colorable(sys: BasisSystem) -> ColoringResult:
    """Backtracking with unit propagation; top-level branches may run in parallel.
    The witness is the lexicographically least colouring in canonical ray order."""
    n = len(sys.rays)
    if n == 0:
        return ColoringResult(sys, {}, None)

    def branch(v):
        return _Search(sys).solve(prefix=((0, v),))

    results = pmap(branch, (0, 1))
    sol = next((r for r in results if r is not None), None)
    if sol is None:
        return ColoringResult(sys, None, parity_certificate(sys))
    return ColoringResult(sys, {sys.rays[i]: sol[i] for i in range(n)}, None)


def count_colorings(sys: BasisSystem) -> int:
    return _Search(sys).solve(count_all=True)


def is_valid_coloring(sys: BasisSystem, coloring: dict) -> bool:
    return all(sum(coloring[sys.rays[i]] for i in b) == 1 for b in sys.bases)


def func_check(valuation: dict, sys: BasisSystem) -> dict:
    """Sum-rule (one 1 per basis) and range ({0,1}) violations of a valuation on rays."""
    val = {canonical_ray(k): v for k, v in valuation.items()}
    missing = [list(r) for r in sys.rays if r not in val]
    rng = [list(r) for r in sys.rays if r in val and val[r] not in (0, 1)]
    sums = []
    for k, b in enumerate(sys.bases):
        if all(sys.rays[i] in val for i in b):
            s = sum(Fraction(val[sys.rays[i]]) for i in b)
            if s != 1:
                sums.append({"basis": k + 1, "sum": str(s)})
    return {"ok": not (missing or rng or sums), "missing": missing, "range_violations": rng,
            "sum_rule_violations": sums}


# ---------------------------------------------------------------- bridge

def poset_from_system(sys: BasisSystem, closure: str = "full") -> ContextPoset:
    return generate_poset(sys.dim, sys.projector_seeds(), closure=closure)


def coloring_from_section(sys: BasisSystem, poset: ContextPoset, section) -> dict:
    """Read a colouring off a global section: ray r is white iff the section's
    point at the context of any basis containing r is r's projector."""
    out = {}
    for k, b in enumerate(sys.bases):
        proj = [la.ray_projector(la.ket(sys.rays[i])) for i in b]
        ctx = poset.find(proj)
        i = poset.index(ctx)
        chosen = ctx.atoms[section[i]]
        for r, p in zip(b, proj):
            out.setdefault(sys.rays[r], 1 if p == chosen else 0)
    return out


# ---------------------------------------------------------------- input

_VEC = re.compile(r"\(([^()]*)\)")


def parse_system(text: str) -> BasisSystem:
    bases = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        vecs = _VEC.findall(line)
        leftover = _VEC.sub("", line).replace(",", " ").strip()
        if not vecs or leftover:
            raise ParseError("expected vectors like (1,0,0,0) separated by spaces", line=lineno)
        basis = []
        for v in vecs:
            try:
                basis.append(tuple(int(x) for x in v.split(",")))
            except ValueError:
                raise ParseError("vector entries must be integers", line=lineno, vector=v) from None
        bases.append(basis)
    if not bases:
        raise ParseError("no bases found")
    return BasisSystem.from_vectors(bases)


def load_system(source: str) -> BasisSystem:
    if source == "kernaghan":
        return kernaghan_system()
    path = Path(source)
    if not path.exists():
        raise ParseError("basis file not found", path=source)
    return parse_system(path.read_text())
