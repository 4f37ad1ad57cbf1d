"""Abelian contexts and the finite poset V(H) they generate.

A context is a resolution of the identity into pairwise orthogonal atoms; its
algebra is the linear span of the atoms.  Algebra inclusion is partition
coarsening: V' <= V iff every atom of V lies under some atom of V'.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Sequence

from . import linalg as la
from .errors import (
    DimensionMismatch,
    ImageOutsidePoset,
    NotInAlgebra,
    NotOrthogonal,
    NotResolution,
    NotSubcontext,
    TrivialContext,
    UnknownContext,
)

CLOSURES = ("full", "singleton")


class Context:
    __slots__ = ("atoms", "label", "blocks", "_key", "_hash")

    def __init__(self, atoms, label, blocks=None):
        self.atoms = tuple(atoms)
        self.label = label
        self.blocks = blocks
        self._key = tuple(a.key() for a in self.atoms)
        self._hash = hash(self._key)

    @property
    def dim(self) -> int:
        return self.atoms[0].dim

    @property
    def size(self) -> int:
        return len(self.atoms)

    def key(self) -> tuple:
        return self._key

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Context) and self._hash == other._hash and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Context({self.label}, {len(self.atoms)} atoms)"

    def projector(self, indices: Iterable[int]) -> la.Operator:
        acc = la.zero(self.dim)
        for i in sorted(indices):
            acc = acc + self.atoms[i]
        return acc.with_kind("projector")

    def atoms_below(self, p: la.Operator) -> frozenset:
        """Indices of atoms a with a <= P."""
        return frozenset(i for i, a in enumerate(self.atoms) if la.dominated(a, p))

    def atoms_meeting(self, p: la.Operator) -> frozenset:
        """Indices of atoms a with aP != 0."""
        return frozenset(i for i, a in enumerate(self.atoms) if not la.orthogonal(a, p))

    def indices_of(self, p: la.Operator) -> frozenset:
        """Atom set whose sum is P; raises NotInAlgebra if P is not in P(V)."""
        idx = self.atoms_below(p)
        if self.projector(idx) != p:
            raise NotInAlgebra("projector is not a sum of atoms of the context", context=self.label)
        return idx

    def contains_projector(self, p: la.Operator) -> bool:
        return self.projector(self.atoms_below(p)) == p

    def coefficients(self, a: la.Operator) -> tuple | None:
        """Coefficients c with A = sum c_k atom_k, or None if A is not in V."""
        cs = []
        acc = la.zero(self.dim)
        for atom in self.atoms:
            c = la.trace_product(atom, a) / atom.trace()
            cs.append(c)
            acc = acc + atom.scale(c)
        if acc != a:
            return None
        return tuple(cs)

    def operator(self, values: Sequence) -> la.Operator:
        """sum values[k] * atom_k."""
        acc = la.zero(self.dim)
        for v, atom in zip(values, self.atoms):
            acc = acc + atom.scale(v)
        return acc

    def to_json(self):
        return {"label": self.label, "atoms": [a.to_json() for a in self.atoms]}


def _canonical(atoms):
    return sorted(atoms, key=lambda a: a.key(), reverse=True)


def _validate_atoms(atoms):
    if len(atoms) < 1:
        raise TrivialContext("a context needs atoms")
    dim = atoms[0].dim
    for a in atoms:
        if a.dim != dim:
            raise DimensionMismatch("atoms differ in dimension")
    checked = []
    for a in atoms:
        p = a if a.kind == "projector" else la.make_projector(a)
        if p.is_zero():
            raise NotResolution("zero atom")
        checked.append(p)
    for i in range(len(checked)):
        for j in range(i + 1, len(checked)):
            if not la.orthogonal(checked[i], checked[j]):
                raise NotOrthogonal("atoms are not pairwise orthogonal", first=i, second=j)
    total = la.zero(dim)
    for p in checked:
        total = total + p
    if total != la.identity(dim):
        raise NotResolution("atoms do not sum to the identity")
    if len(checked) == 1:
        raise TrivialContext("the trivial algebra C1 is excluded")
    return checked


def _standard_blocks(atoms):
    """Describe atoms as blocks of standard projectors P1..Pn when possible."""
    blocks = []
    for a in atoms:
        if not a.is_diagonal():
            return None
        d = a.diagonal()
        if any(x not in (0, 1) for x in d):
            return None
        blocks.append(tuple(f"P{i + 1}" for i, x in enumerate(d) if x == 1))
    return blocks


def label_from_blocks(blocks, order, base="V") -> str:
    """Human-readable name following the V, V_{PiPj}, V_{Pi}, V_{Pi+Pj} scheme.

    ``order`` is the seed's atom-name order; it decides which block is left
    implicit (the complement) when a label lists only some blocks.
    """
    pos = {n: i for i, n in enumerate(order)}
    blocks = sorted((tuple(sorted(b, key=pos.__getitem__)) for b in blocks), key=lambda b: pos[b[0]])
    big = [b for b in blocks if len(b) > 1]
    if not big:
        return base
    if len(big) == 1:
        return base + "_{" + "".join(b[0] for b in blocks if len(b) == 1) + "}"
    if len(blocks) == 2:
        return base + "_{" + "+".join(blocks[0]) + "}"
    last = order[-1]
    shown = [b for b in blocks if last not in b]
    return base + "_{" + ",".join("+".join(b) for b in shown) + "}"


def _digest_label(atoms) -> str:
    h = hashlib.sha1(repr(tuple(a.key() for a in atoms)).encode()).hexdigest()[:8]
    return f"V#{h}"


def context_from_atoms(atoms: Sequence, label: str | None = None) -> Context:
    atoms = [a if isinstance(a, la.Operator) else la.matrix(a) for a in atoms]
    checked = _canonical(_validate_atoms(atoms))
    blocks = _standard_blocks(checked)
    if label is None:
        if blocks is not None:
            order = [f"P{i + 1}" for i in range(checked[0].dim)]
            label = label_from_blocks(blocks, order)
        else:
            label = _digest_label(checked)
    return Context(checked, label, blocks)


def set_partitions(n: int):
    """All partitions of range(n) as lists of blocks (restricted growth strings)."""
    if n == 0:
        yield []
        return
    rgs = [0] * n

    def rec(i, m):
        if i == n:
            blocks = [[] for _ in range(m + 1)]
            for k, b in enumerate(rgs):
                blocks[b].append(k)
            yield blocks
            return
        for b in range(m + 2):
            rgs[i] = b
            yield from rec(i + 1, max(m, b))

    rgs[0] = 0
    yield from rec(1, 0)


class ContextPoset:
    """Finite poset of contexts closed under coarsening of the seed partitions.

    Contexts are indexed 0..n-1 in a deterministic order (finer contexts first,
    then by label).  ``down[i]`` is the index set of the down-set of i;
    ``restriction(i, j)`` maps atom indices of i to the dominating atom of j.
    """

    def __init__(self, dim, contexts, closure="full", atom_names=None):
        self.dim = dim
        self.closure = closure
        self.contexts = tuple(contexts)
        self.atom_names = dict(atom_names or {})
        self._by_key = {c.key(): i for i, c in enumerate(self.contexts)}
        self._by_label = {}
        for i, c in enumerate(self.contexts):
            if c.label in self._by_label:
                raise ValueError(f"duplicate context label {c.label}")
            self._by_label[c.label] = i
        self._build_order()

    def _build_order(self):
        n = len(self.contexts)
        ids = {}
        atom_ids = []
        for c in self.contexts:
            atom_ids.append(tuple(ids.setdefault(a, len(ids)) for a in c.atoms))
        ops = [None] * len(ids)
        for a, k in ids.items():
            ops[k] = a
        dom_cache = {}

        def dom(x, y):
            v = dom_cache.get((x, y))
            if v is None:
                v = la.dominated(ops[x], ops[y])
                dom_cache[(x, y)] = v
            return v

        self._res = {}
        down = [set() for _ in range(n)]
        for i, v in enumerate(self.contexts):
            for j, w in enumerate(self.contexts):
                if w.size > v.size:
                    continue
                if i == j:
                    self._res[(i, i)] = tuple(range(v.size))
                    down[i].add(i)
                    continue
                mapping = []
                for a in atom_ids[i]:
                    hit = None
                    for k, b in enumerate(atom_ids[j]):
                        if dom(a, b):
                            hit = k
                            break
                    if hit is None:
                        break
                    mapping.append(hit)
                else:
                    self._res[(i, j)] = tuple(mapping)
                    down[i].add(j)
        self.down = tuple(frozenset(d) for d in down)
        up = [set() for _ in range(n)]
        for i in range(n):
            for j in self.down[i]:
                up[j].add(i)
        self.up = tuple(frozenset(u) for u in up)
        self.maximal = tuple(i for i in range(n) if self.up[i] == {i})
        covers = []
        for i in range(n):
            below = self.down[i] - {i}
            for j in sorted(below):
                if not any(j in self.down[k] for k in below if k != j):
                    covers.append((i, j))
        self.covers = tuple(covers)

    def __len__(self):
        return len(self.contexts)

    def __iter__(self):
        return iter(self.contexts)

    def __contains__(self, v):
        return isinstance(v, Context) and v.key() in self._by_key

    def index(self, v) -> int:
        """Index of a Context, a label, or an int."""
        if isinstance(v, int):
            if 0 <= v < len(self.contexts):
                return v
            raise UnknownContext("context index out of range", index=v)
        if isinstance(v, Context):
            i = self._by_key.get(v.key())
            if i is None:
                raise UnknownContext("context is not in the poset", label=v.label)
            return i
        i = self._by_label.get(v)
        if i is None:
            raise UnknownContext("no context with this label", label=v)
        return i

    def get(self, v) -> Context:
        return self.contexts[self.index(v)]

    def find(self, atoms) -> Context | None:
        i = self._by_key.get(tuple(a.key() for a in _canonical(atoms)))
        return None if i is None else self.contexts[i]

    def labels(self) -> list:
        return [c.label for c in self.contexts]

    def leq(self, a, b) -> bool:
        """a <= b (a is a sub-algebra of b)."""
        return self.index(a) in self.down[self.index(b)]

    def restriction(self, v, w) -> tuple:
        i, j = self.index(v), self.index(w)
        try:
            return self._res[(i, j)]
        except KeyError:
            raise NotSubcontext("not a sub-context", source=self.contexts[i].label,
                                target=self.contexts[j].label) from None

    def meet(self, a, b) -> Context | None:
        """Finest common coarsening inside the poset, or None."""
        common = self.down[self.index(a)] & self.down[self.index(b)]
        for m in sorted(common):
            if common <= self.down[m]:
                return self.contexts[m]
        return None

    def is_downward_closed(self) -> bool:
        """Every nontrivial coarsening of every member is a member."""
        for c in self.contexts:
            for blocks in set_partitions(c.size):
                if len(blocks) < 2:
                    continue
                atoms = [c.projector(b) for b in blocks]
                if self.find(atoms) is None:
                    return False
        return True

    def to_json(self):
        return {
            "dim": self.dim,
            "closure": self.closure,
            "contexts": [
                {
                    "label": c.label,
                    "atoms": ["+".join(b) for b in c.blocks] if c.blocks else [a.to_json() for a in c.atoms],
                    "maximal": i in self.maximal,
                    "below": [self.contexts[j].label for j in sorted(self.down[i]) if j != i],
                }
                for i, c in enumerate(self.contexts)
            ],
            "covers": [[self.contexts[i].label, self.contexts[j].label] for i, j in self.covers],
        }

    def to_dot(self, highlight=()) -> str:
        hl = {self.index(h) for h in highlight}
        lines = ["digraph V {", "  rankdir=BT;", "  node [shape=box];"]
        for i, c in enumerate(self.contexts):
            attrs = [f'label="{c.label}"']
            if i in hl:
                attrs.append("style=filled")
                attrs.append('fillcolor="lightblue"')
            lines.append(f"  n{i} [{', '.join(attrs)}];")
        ranks = {}
        for i, c in enumerate(self.contexts):
            ranks.setdefault(c.size, []).append(i)
        for size in sorted(ranks):
            lines.append("  { rank=same; " + " ".join(f"n{i};" for i in ranks[size]) + " }")
        for i, j in self.covers:
            lines.append(f"  n{j} -> n{i};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _default_names(seeds, dim):
    names = {}
    extra = 0
    for fam in seeds:
        for p in fam:
            if p.key() in names:
                continue
            blocks = _standard_blocks([p])
            if blocks is not None and len(blocks[0]) == 1:
                names[p.key()] = blocks[0][0]
            else:
                extra += 1
                names[p.key()] = f"Q{extra}"
    return names


def generate_poset(dim: int, seeds: Sequence, names=None, closure: str = "full") -> ContextPoset:
    """Contexts generated by seed atom families, closed under coarsening.

    ``closure="full"`` adds every nontrivial coarsening.  ``closure="singleton"``
    keeps only coarsenings with at most one non-singleton block, which is the
    classic V, V_{PiPj}, V_{Pi} inventory for C^4.
    ``names`` optionally maps each seed atom (parallel list of lists) to a name.
    """
    if closure not in CLOSURES:
        raise ValueError(f"closure must be one of {CLOSURES}")
    fams = []
    for fam in seeds:
        fam = [a if isinstance(a, la.Operator) else la.matrix(a) for a in fam]
        for a in fam:
            if a.dim != dim:
                raise DimensionMismatch("seed atom has wrong dimension", expected=dim, got=a.dim)
        fams.append(_validate_atoms(fam))
    name_of = _default_names(fams, dim)
    if names is not None:
        for fam, nfam in zip(fams, names):
            for p, nm in zip(fam, nfam):
                name_of[p.key()] = nm
    found = {}
    order = []
    for s, fam in enumerate(fams):
        fam = _canonical(fam)
        seed_names = [name_of[p.key()] for p in fam]
        base = "V" if len(fams) == 1 else f"V{s + 1}"
        for blocks in set_partitions(len(fam)):
            if len(blocks) < 2:
                continue
            if closure == "singleton" and sum(1 for b in blocks if len(b) > 1) > 1:
                continue
            atoms = []
            for b in blocks:
                acc = la.zero(dim)
                for k in b:
                    acc = acc + fam[k]
                atoms.append(acc.with_kind("projector"))
            atoms = _canonical(atoms)
            key = tuple(a.key() for a in atoms)
            if key in found:
                continue
            named = []
            for a in atoms:
                blk = next(b for b in blocks if _block_sum(fam, b, dim) == a)
                named.append(tuple(seed_names[k] for k in blk))
            is_top = all(len(b) == 1 for b in blocks)
            label = base if is_top else label_from_blocks(named, seed_names)
            found[key] = Context(atoms, label, tuple(named))
            order.append(key)
    ctxs = [found[k] for k in order]
    seen = {}
    for c in ctxs:
        if c.label in seen:
            seen[c.label] += 1
            c.label = c.label + "'" * seen[c.label]
        else:
            seen[c.label] = 0
    ranked = sorted(range(len(ctxs)), key=lambda i: (-ctxs[i].size, ctxs[i].label))
    names_out = {k: v for k, v in name_of.items()}
    return ContextPoset(dim, [ctxs[i] for i in ranked], closure, names_out)


def _block_sum(fam, block, dim):
    acc = la.zero(dim)
    for k in block:
        acc = acc + fam[k]
    return acc


def standard_seed(dim: int) -> list:
    return [la.basis_projector(dim, i) for i in range(dim)]


def down_set(poset: ContextPoset, v) -> set:
    i = poset.index(v)
    return {poset.contexts[j] for j in poset.down[i]}


def apply_unitary(poset: ContextPoset, u: la.Operator, g_label: str = "U", extend: bool = False) -> dict:
    """l_U(V) = U V U*, as a map from poset contexts to contexts."""
    la.require_unitary(u)
    out = {}
    for c in poset.contexts:
        atoms = [la.conjugate(u, a) for a in c.atoms]
        img = poset.find(atoms)
        if img is None:
            if not extend:
                raise ImageOutsidePoset("conjugated context is not in the poset", context=c.label, group=g_label)
            img = context_from_atoms(atoms, label=f"{g_label}({c.label})")
        out[c] = img
    return out
