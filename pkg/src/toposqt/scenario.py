"""Scenario files: one JSON document describing a Hilbert space, its seeds,
operators, states, propositions and unitaries.  See docs/scenario.schema.json.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import linalg as la
from .contexts import CLOSURES, ContextPoset, generate_poset
from .errors import ParseError, ToposError, ValidationError

SECTIONS = ("projectors", "operators", "states", "propositions", "unitaries")


@dataclass
class Proposition:
    name: str
    operator: str
    interval: tuple
    projector: la.Operator


@dataclass
class Scenario:
    dim: int
    closure: str
    projectors: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    operators: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict)
    propositions: dict = field(default_factory=dict)
    unitaries: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    _poset: ContextPoset | None = None

    @property
    def poset(self) -> ContextPoset:
        if self._poset is None:
            seeds = [[self.projectors[n] for n in fam] for fam in self.seeds]
            self._poset = generate_poset(self.dim, seeds, names=self.seeds, closure=self.closure)
        return self._poset

    def lookup(self, section, name):
        table = getattr(self, section)
        if name not in table:
            raise ValidationError(f"unknown {section[:-1]} name", name=name,
                                  known=",".join(sorted(table)) or "none")
        return table[name]


def _rational(x, where) -> Fraction:
    if isinstance(x, bool) or isinstance(x, float):
        raise ValidationError("numbers must be integers or 'p/q' strings", at=where, value=x)
    try:
        return la._frac(x)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ValidationError("not an exact rational", at=where, value=x) from None


def _scalar(x, where) -> la.Scalar:
    if isinstance(x, dict):
        extra = set(x) - {"re", "im"}
        if extra:
            raise ValidationError("complex entries take only 're' and 'im'", at=where)
        return la.Scalar(_rational(x.get("re", 0), where), _rational(x.get("im", 0), where))
    return la.Scalar(_rational(x, where))


def _vector(v, dim, where) -> tuple:
    if not isinstance(v, list) or len(v) != dim:
        raise ValidationError(f"vector must be a list of {dim} entries", at=where)
    return tuple(_scalar(x, f"{where}[{i}]") for i, x in enumerate(v))


def _matrix(m, dim, where) -> la.Operator:
    if not isinstance(m, list) or len(m) != dim or any(not isinstance(r, list) or len(r) != dim for r in m):
        raise ValidationError(f"matrix must be {dim}x{dim}", at=where)
    return la.Operator(tuple(tuple(_scalar(x, f"{where}[{i}][{j}]") for j, x in enumerate(r))
                             for i, r in enumerate(m)))


def _wrap(where, fn, *args):
    try:
        return fn(*args)
    except ValidationError:
        raise
    except ToposError as e:
        raise ValidationError(f"{where}: {e.message}", object=where, violated=e.code) from None


def parse_scenario(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ValidationError("scenario must be a JSON object")
    known = {"dim", "field", "closure", "seeds", "thresholds", "description", *SECTIONS}
    extra = set(data) - known
    if extra:
        raise ValidationError("unknown top-level keys", keys=",".join(sorted(extra)))
    dim = data.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 2:
        raise ValidationError("dim must be an integer >= 2")
    if data.get("field", "rational") != "rational":
        raise ValidationError("field must be 'rational'")
    closure = data.get("closure", "full")
    if closure not in CLOSURES:
        raise ValidationError("closure must be 'full' or 'singleton'", closure=closure)
    sc = Scenario(dim=dim, closure=closure)

    seen = {}
    for sec in SECTIONS:
        block = data.get(sec, {})
        if not isinstance(block, dict):
            raise ValidationError(f"'{sec}' must be an object")
        for name in block:
            if name in seen:
                raise ValidationError("duplicate name", name=name, first=seen[name], second=sec)
            seen[name] = sec

    for name, spec in data.get("projectors", {}).items():
        where = f"projectors.{name}"
        if "vector" in spec:
            v = _vector(spec["vector"], dim, where)
            sc.projectors[name] = _wrap(where, la.ray_projector, v)
        elif "matrix" in spec:
            sc.projectors[name] = _wrap(where, la.make_projector, _matrix(spec["matrix"], dim, where))
        else:
            raise ValidationError("projector needs 'vector' or 'matrix'", at=where)

    seeds = data.get("seeds", [])
    if not isinstance(seeds, list) or not seeds:
        raise ValidationError("seeds must be a non-empty list of projector-name lists")
    for n, fam in enumerate(seeds):
        if not isinstance(fam, list):
            raise ValidationError("seed must be a list of projector names", seed=n + 1)
        for nm in fam:
            if nm not in sc.projectors:
                raise ValidationError("seed references an undefined projector", seed=n + 1, name=nm)
        sc.seeds.append(list(fam))

    for name, spec in data.get("operators", {}).items():
        where = f"operators.{name}"
        if "spectral" in spec:
            pairs = []
            for k, item in enumerate(spec["spectral"]):
                lam = _rational(item.get("eigenvalue"), f"{where}.spectral[{k}]")
                pn = item.get("projector")
                if pn not in sc.projectors:
                    raise ValidationError("spectral entry references an undefined projector", at=where, name=pn)
                pairs.append((lam, sc.projectors[pn]))
            pairs.sort(key=lambda t: t[0])
            acc = la.zero(dim)
            for lam, p in pairs:
                acc = acc + p.scale(lam)
            sc.operators[name] = _wrap(where, la.resolved, acc, pairs)
        elif "matrix" in spec:
            sc.operators[name] = _wrap(where, la.resolved, _matrix(spec["matrix"], dim, where))
        elif "diagonal" in spec:
            d = _vector(spec["diagonal"], dim, where)
            sc.operators[name] = _wrap(where, la.resolved, la.diag(*d))
        else:
            raise ValidationError("operator needs 'matrix', 'diagonal' or 'spectral'", at=where)

    for name, spec in data.get("states", {}).items():
        where = f"states.{name}"
        if "vector" in spec:
            v = _vector(spec["vector"], dim, where)
            _wrap(where, la.require_unit, v)
            sc.states[name] = v
        elif "mixture" in spec:
            mix = []
            for k, item in enumerate(spec["mixture"]):
                mix.append((_rational(item.get("p"), f"{where}.mixture[{k}].p"),
                            _vector(item.get("vector"), dim, f"{where}.mixture[{k}].vector")))
            m = _matrix(spec["matrix"], dim, where) if "matrix" in spec else None
            sc.states[name] = _wrap(where, la.density, mix, m)
        else:
            raise ValidationError("state needs 'vector' or 'mixture'", at=where)

    for name, spec in data.get("propositions", {}).items():
        where = f"propositions.{name}"
        opn = spec.get("operator")
        if opn not in sc.operators:
            raise ValidationError("proposition references an undefined operator", at=where, name=opn)
        iv = spec.get("interval")
        if not isinstance(iv, list) or len(iv) != 2:
            raise ValidationError("interval must be [low, high]", at=where)
        lo, hi = _rational(iv[0], where), _rational(iv[1], where)
        if lo > hi:
            raise ValidationError("interval is empty (low > high)", at=where)
        res = sc.operators[opn].resolution
        proj = res.projector_on(lambda l: lo <= l <= hi)
        sc.propositions[name] = Proposition(name, opn, (lo, hi), proj)

    for name, spec in data.get("unitaries", {}).items():
        where = f"unitaries.{name}"
        if "matrix" not in spec:
            raise ValidationError("unitary needs 'matrix'", at=where)
        u = _matrix(spec["matrix"], dim, where)
        sc.unitaries[name] = _wrap(where, la.require_unitary, u)

    for name, r in data.get("thresholds", {}).items():
        val = _rational(r, f"thresholds.{name}")
        if not (0 < val <= 1):
            raise ValidationError("threshold must lie in (0, 1]", name=name)
        sc.thresholds[name] = val

    _wrap("seeds", lambda: sc.poset)
    return sc


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ParseError("cannot read scenario file", path=str(p), reason=e.strerror) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from None
    return parse_scenario(data)
