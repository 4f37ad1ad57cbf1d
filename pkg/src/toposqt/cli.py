"""Command-line driver: ``toposqt --scenario FILE <subcommand> ...``.

Exit codes: 0 success, 1 domain error (JSON object on stderr), 2 usage error.
Output is deterministic: every listing follows the poset's canonical order.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import dasein, kochen, linalg as la, presheaf, probability, truth
from .errors import ToposError, ValidationError
from .scenario import Scenario, load_scenario


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _atom_names(ctx):
    if ctx.blocks:
        return ["+".join(b) for b in ctx.blocks]
    return [f"a{k}" for k in range(ctx.size)]


def _selected(ctx, idx):
    names = _atom_names(ctx)
    return [names[k] for k in sorted(idx)]


def _matrix_json(op):
    out = {"matrix": op.to_json()}
    if op.is_diagonal():
        out["diagonal"] = [x.to_json() for x in op.diagonal()]
    return out


def _contexts_for(sc, at):
    p = sc.poset
    if at is None:
        return list(p.contexts)
    return [p.get(at)]


def _state(sc, name):
    return sc.lookup("states", name)


def _is_pure(state):
    return not isinstance(state, la.Operator)


def _rat(s, what):
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{what} must be a rational like 7/10, got {s!r}") from None


def _operator_or_prop(sc, name):
    if name in sc.propositions:
        return "proposition", sc.propositions[name].projector
    if name in sc.operators:
        return "operator", sc.operators[name]
    if name in sc.projectors:
        return "proposition", sc.projectors[name]
    raise ValidationError("unknown proposition or operator name", name=name)


def _subobject(sc, name):
    p = sc.poset
    if name == "Sigma":
        return presheaf.ClopenSubobject.full(p)
    if name == "empty":
        return presheaf.ClopenSubobject.empty(p)
    if name in sc.propositions or name in sc.projectors:
        _, proj = _operator_or_prop(sc, name)
        return dasein.dasein_proj_global(proj, p).subobject
    if name in sc.states and _is_pure(sc.states[name]):
        return truth.pseudo_state(sc.states[name], p).subobject
    raise ValidationError("unknown sub-object (use a proposition, a pure state, Sigma or empty)", name=name)


def _subobject_json(sub):
    p = sub.poset
    return {c.label: _selected(c, sub.sel[i]) for i, c in enumerate(p.contexts)}


# ---------------------------------------------------------------- subcommands

def cmd_contexts(args, sc):
    p = sc.poset
    out = {
        "dim": p.dim,
        "closure": p.closure,
        "count": len(p),
        "contexts": [
            {"label": c.label, "atoms": _atom_names(c), "maximal": i in p.maximal,
             "below": [p.contexts[j].label for j in sorted(p.down[i]) if j != i]}
            for i, c in enumerate(p.contexts)
        ],
        "covers": [[p.contexts[i].label, p.contexts[j].label] for i, j in p.covers],
    }
    return out, p.to_dot()


def cmd_daseinise(args, sc):
    kind, op = _operator_or_prop(sc, args.name)
    ctxs = _contexts_for(sc, args.at)
    if kind == "proposition":
        if args.inner:
            per = {c.label: {"atoms": _selected(c, c.atoms_below(op)),
                             **_matrix_json(dasein.dasein_inner_proj(op, c))} for c in ctxs}
        else:
            per = {c.label: {"atoms": _selected(c, c.atoms_meeting(op)),
                             **_matrix_json(dasein.dasein_outer_proj(op, c))} for c in ctxs}
        out = {"name": args.name, "kind": "proposition", "mode": "inner" if args.inner else "outer",
               "source": _matrix_json(op), "per_context": per}
        if not args.inner and args.at is None:
            out["subobject"] = _subobject_json(dasein.dasein_proj_global(op, sc.poset).subobject)
        return out, None
    fn = dasein.dasein_inner_sa if args.inner else dasein.dasein_outer_sa
    per = {}
    for c in ctxs:
        d = fn(op, c)
        per[c.label] = {"spectrum": [str(l) for l in d.resolution.eigenvalues], **_matrix_json(d)}
    return {"name": args.name, "kind": "operator", "mode": "inner" if args.inner else "outer",
            "source": _matrix_json(op), "per_context": per}, None


def _truth_value(sc, prop_name, state_name, r):
    _, proj = _operator_or_prop(sc, prop_name)
    state = _state(sc, state_name)
    p = sc.poset
    prop = dasein.dasein_proj_global(proj, p)
    if _is_pure(state) and (r is None or r == 1):
        w = truth.pseudo_state(state, p)
        t = truth.truth_object(state, p)
        tv = truth.truth_value(prop, w)
        check = truth.truth_value(prop, t)
        if check.global_ != tv.global_:
            raise ToposError("pseudo-state and truth-object routes disagree")
        route = "pseudo-state"
    else:
        t = truth.truth_object(state, p, r)
        tv = truth.truth_value(prop, t)
        route = "truth-object"
    return tv, route, (t.r if not _is_pure(state) or r is not None else Fraction(1))


def cmd_truth_value(args, sc):
    r = _rat(args.r, "--r") if args.r is not None else None
    tv, route, rr = _truth_value(sc, args.prop, args.state, r)
    out = {"proposition": args.prop, "state": args.state, "r": str(rr), "route": route}
    if args.at is not None:
        s = tv.at(args.at)
        out["at"] = s.poset.contexts[s.root].label
        out["members"] = s.labels()
        out["totally_true"] = s.is_principal()
        out["totally_false"] = s.is_empty()
        return out, s.to_dot()
    out.update(tv.to_json())
    top = sc.poset.maximal[0]
    return out, tv.global_.sieves[top].to_dot()


def cmd_pseudo_state(args, sc):
    state = _state(sc, args.state)
    if not _is_pure(state):
        raise ValidationError("pseudo-states need a pure state", name=args.state)
    w = truth.pseudo_state(state, sc.poset)
    ctxs = _contexts_for(sc, args.at)
    per = {c.label: {"atoms": _selected(c, w.subobject.at(c)), **_matrix_json(w.at(c))} for c in ctxs}
    return {"state": args.state, "per_context": per}, None


def cmd_measure(args, sc):
    state = _state(sc, args.state)
    if _is_pure(state):
        state = la.density([(1, state)])
    sub = _subobject(sc, args.subobject)
    w = probability.measure(state, sub)
    return {"state": args.state, "subobject": args.subobject, "weight": w.to_json()}, None


def _parse_root(text):
    if "," not in text:
        raise UsageError("--root must look like V,p/q")
    label, r = text.rsplit(",", 1)
    return label.strip(), _rat(r.strip(), "root threshold")


def cmd_prob_truth(args, sc):
    _, proj = _operator_or_prop(sc, args.prop)
    state = _state(sc, args.density)
    if _is_pure(state):
        state = la.density([(1, state)])
    label, r = _parse_root(args.root)
    prop = dasein.dasein_proj_global(proj, sc.poset)
    ps = probability.truth_value_probabilistic(prop, state, (label, r))
    return {"proposition": args.prop, "state": args.density, **ps.to_json()}, None


def cmd_ks_check(args, sc):
    sys_ = kochen.load_system(args.source)
    res = kochen.ks_colorable(sys_)
    out = res.to_json()
    out["multiplicity_profile"] = {str(k): v for k, v in sys_.multiplicity_profile().items()}
    if res.certificate is not None:
        out["certificate_valid"] = kochen.verify_parity_certificate(sys_, res.certificate)
    return out, None


def cmd_global_sections(args, sc):
    if args.system is not None:
        poset = kochen.poset_from_system(kochen.load_system(args.system))
        source = args.system
    else:
        if sc is None:
            raise UsageError("global-sections needs --scenario or --system")
        poset = sc.poset
        source = "scenario"
    secs = presheaf.global_section_indices(poset)
    shown = secs if args.limit is None else secs[: args.limit]
    return {
        "source": source,
        "contexts": len(poset),
        "count": len(secs),
        "sections": [{c.label: _atom_names(c)[s[i]] for i, c in enumerate(poset.contexts)} for s in shown],
    }, None


def cmd_covariance(args, sc):
    _, proj = _operator_or_prop(sc, args.prop)
    state = _state(sc, args.state)
    if not _is_pure(state):
        raise ValidationError("covariance needs a pure state", name=args.state)
    u = sc.lookup("unitaries", args.unitary)
    p = sc.poset
    rep = truth.covariance_report(proj, state, u, p)
    rows = {}
    ok = True
    for i, c in enumerate(p.contexts):
        if args.at is not None and p.index(args.at) != i:
            continue
        left, right = rep[i]
        same = left == right
        ok = ok and same
        rows[c.label] = {"image_context": p.contexts[left.root].label, "transformed_sieve": left.labels(),
                         "sieve_of_transformed": right.labels(), "equal": same}
    return {"proposition": args.prop, "state": args.state, "unitary": args.unitary,
            "covariant": ok, "per_context": rows}, None


def cmd_value_interval(args, sc):
    op = sc.lookup("operators", args.op)
    if ":" not in args.point:
        raise UsageError("point must look like CONTEXT:ATOM (atom index or atom name)")
    label, atom = args.point.rsplit(":", 1)
    p = sc.poset
    ctx = p.get(label)
    names = _atom_names(ctx)
    if atom in names:
        k = names.index(atom)
    else:
        try:
            k = int(atom)
        except ValueError:
            raise ValidationError("unknown atom", context=label, atom=atom) from None
        if not 0 <= k < ctx.size:
            raise ValidationError("atom index out of range", context=label, atom=atom)
    vi = dasein.breve_delta(op, presheaf.SpectralPoint(ctx, k), p)
    return {"operator": args.op, "point": {"context": ctx.label, "atom": names[k]},
            "interval": vi.to_json()}, None


COMMANDS = {
    "contexts": cmd_contexts,
    "daseinise": cmd_daseinise,
    "truth-value": cmd_truth_value,
    "pseudo-state": cmd_pseudo_state,
    "measure": cmd_measure,
    "prob-truth": cmd_prob_truth,
    "ks-check": cmd_ks_check,
    "global-sections": cmd_global_sections,
    "covariance": cmd_covariance,
    "value-interval": cmd_value_interval,
}
NO_SCENARIO = {"ks-check", "global-sections"}


# ---------------------------------------------------------------- rendering

def _table(obj, indent=0) -> list:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.extend(_table(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_inline(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and not _flat(v):
                lines.append(f"{pad}-")
                lines.extend(_table(v, indent + 1))
            else:
                lines.append(f"{pad}- {_inline(v)}")
    else:
        lines.append(f"{pad}{_inline(obj)}")
    return lines


def _flat(v):
    if isinstance(v, list):
        return all(not isinstance(x, (dict, list)) for x in v)
    return False


def _inline(v):
    if isinstance(v, list):
        return "[" + ", ".join(_inline(x) for x in v) + "]"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_inline(x)}" for k, x in v.items()) + "}"
    return str(v)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toposqt", description="Exact topos quantum theory engine.")
    ap.add_argument("-s", "--scenario", help="scenario JSON file")
    ap.add_argument("-f", "--format", choices=("json", "table", "dot"), default="json")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-s", "--scenario", default=argparse.SUPPRESS, help="scenario JSON file")
    common.add_argument("-f", "--format", choices=("json", "table", "dot"), default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    sub.add_parser("contexts", help="list the context poset")

    d = sub.add_parser("daseinise", help="daseinise a proposition or operator")
    d.add_argument("name")
    d.add_argument("--inner", action="store_true")
    d.add_argument("--at")

    t = sub.add_parser("truth-value", help="sieve-valued truth value")
    t.add_argument("prop")
    t.add_argument("state")
    t.add_argument("--at")
    t.add_argument("--r")

    w = sub.add_parser("pseudo-state", help="daseinised state projector")
    w.add_argument("state")
    w.add_argument("--at")

    m = sub.add_parser("measure", help="mu_rho of a sub-object")
    m.add_argument("state")
    m.add_argument("subobject")

    pt = sub.add_parser("prob-truth", help="truth value on V(H) x (0,1)_L")
    pt.add_argument("prop")
    pt.add_argument("density")
    pt.add_argument("--root", required=True)

    k = sub.add_parser("ks-check", help="Kochen-Specker colourability")
    k.add_argument("source", nargs="?", default="kernaghan")

    g = sub.add_parser("global-sections", help="global sections of the spectral presheaf")
    g.add_argument("--system")
    g.add_argument("--limit", type=int)

    c = sub.add_parser("covariance", help="Dirac covariance check")
    c.add_argument("prop")
    c.add_argument("state")
    c.add_argument("unitary")
    c.add_argument("--at")

    v = sub.add_parser("value-interval", help="value interval at a spectral point")
    v.add_argument("op")
    v.add_argument("point")
    return ap


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        sc: Scenario | None = None
        if args.command not in NO_SCENARIO:
            if args.scenario is None:
                raise UsageError(f"{args.command} needs --scenario")
            sc = load_scenario(args.scenario)
        elif args.scenario is not None:
            sc = load_scenario(args.scenario)
        out, dot = COMMANDS[args.command](args, sc)
        if args.format == "dot":
            if dot is None:
                raise UsageError(f"--format dot is not available for {args.command}")
            stdout.write(dot)
        elif args.format == "table":
            stdout.write("\n".join(_table(out)) + "\n")
        else:
            stdout.write(json.dumps(out, indent=2) + "\n")
        return 0
    except UsageError as e:
        stderr.write(f"toposqt: error: {e}\n")
        return 2
    except ToposError as e:
        stderr.write(json.dumps(e.to_json()) + "\n")
        return 1
    except ValueError as e:
        stderr.write(json.dumps({"error": "ValueError", "message": str(e)}) + "\n")
        return 1


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
