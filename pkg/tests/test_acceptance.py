"""The ten acceptance criteria, one test each.

Run ``pytest tests/test_acceptance.py`` (or the whole suite); the terminal
summary prints one PASS/FAIL line per criterion.
"""

import io
import json
import os
import random
import subprocess
import sys
import time
from fractions import Fraction as F
from itertools import permutations, product

import pytest

from toposqt import linalg as la
from toposqt.cli import run
from toposqt.contexts import apply_unitary, generate_poset, standard_seed
from toposqt.dasein import dasein_inner_sa, dasein_outer_sa, dasein_proj_global, inner_values, outer_values
from toposqt.kochen import kernaghan_system, ks_colorable, poset_from_system, verify_parity_certificate
from toposqt.presheaf import (
    ClopenSubobject,
    Sieve,
    global_section_indices,
    random_clopen,
    random_sieve,
    restrict_point,
    spectrum,
)
from toposqt.probability import (
    Measure,
    OrderReversingWeight,
    all_projections,
    check_measure_axioms,
    extract_state_weights,
    l_map,
    l_separation_witness,
    measure,
    truth_separation_witnesses,
    truth_value_probabilistic,
)
from toposqt.truth import (
    covariance_report,
    pseudo_state,
    truth_object,
    truth_value,
    truth_value_pseudostate,
    truth_value_truthobject,
)

from conftest import ROOT, SCENARIOS
from heyting import check_laws
from oracles import rational_rotation, spectral_max_below, spectral_min_above, trace_weight
from tables import (
    DERIVED_INNER,
    DERIVED_OUTER,
    PRINTED_INNER,
    PRINTED_OUTER,
    SIEVE_P1_RHO_AT_V,
    SIEVES_P4_PSI,
)

E = [la.ket([int(i == k) for i in range(4)]) for k in range(4)]
P = [la.basis_projector(4, k) for k in range(4)]


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def _block_name(atom):
    """Basis indices (1-based) covered by a diagonal atom, as a golden-file name."""
    idx = [str(i + 1) for i, x in enumerate(atom.diagonal()) if x == 1]
    return "lambda_" + (idx[0] if len(idx) == 1 else "{" + "".join(idx) + "}")


# ---------------------------------------------------------------- 1

def test_criterion_1_kernaghan_uncolorable():
    code, out, err = _cli("ks-check", "kernaghan")
    assert code == 0, err
    report = json.loads(out)
    assert report["result"] == "uncolorable"
    ks = kernaghan_system()
    assert verify_parity_certificate(ks, report["certificate"])

    t0 = time.perf_counter()
    res = ks_colorable(ks)
    elapsed = time.perf_counter() - t0
    assert not res.colorable and elapsed < 5, elapsed

    # independent parity argument: 11 bases, every ray in an even number of them
    mult = ks.multiplicities()
    assert len(ks.bases) % 2 == 1 and all(c % 2 == 0 for c in mult.values())

    poset = poset_from_system(ks)
    assert global_section_indices(poset) == []


# ---------------------------------------------------------------- 2

def test_criterion_2_spectral_presheaf_golden(p11):
    golden = json.loads((ROOT / "tests" / "fixtures" / "c4_spectral_presheaf.json").read_text())
    spectra = {c.label: [_block_name(a) for a in c.atoms] for c in p11.contexts}
    assert {k: sorted(v) for k, v in spectra.items()} == {k: sorted(v) for k, v in golden["spectra"].items()}
    maps = {}
    for big in p11.contexts:
        for small in p11.contexts:
            if big is small or not p11.leq(small, big):
                continue
            maps[f"{big.label} -> {small.label}"] = {
                _block_name(pt.atom): _block_name(restrict_point(pt, small, p11).atom) for pt in spectrum(big)
            }
    assert maps == golden["restrictions"]
    # the worked example: lambda_3 and lambda_4 both restrict to lambda'_3 = lambda_{34}
    m = maps["V -> V_{P1P2}"]
    assert m["lambda_3"] == m["lambda_4"] == "lambda_{34}"
    assert m["lambda_1"] == "lambda_1" and m["lambda_2"] == "lambda_2"


# ---------------------------------------------------------------- 3

def test_criterion_3_daseinisation_of_p1(p14):
    d = dasein_proj_global(P[0], p14)
    one = la.identity(4)
    expected = {}
    for c in p14.contexts:
        if P[0] in c.atoms:
            expected[c.label] = P[0]                       # contexts containing P1
        else:
            # the atom holding e1 is P1 + (the other basis vectors in that block)
            expected[c.label] = next(a for a in c.atoms if a.entries[0][0] == 1)
    assert {c.label: d.at(c) for c in p14.contexts} == expected
    # the classes named in the worked example
    for lab in ("V", "V_{P1P2}", "V_{P1P3}", "V_{P1P4}", "V_{P1}"):
        assert d.at(lab) == P[0]
    for i, j, k in ((2, 3, 4), (2, 4, 3), (3, 4, 2)):
        assert d.at(f"V_{{P{i}P{j}}}") == P[0] + P[k - 1]
    for i in (2, 3, 4):
        assert d.at(f"V_{{P{i}}}") == one - P[i - 1]
    for j in (2, 3, 4):
        assert d.at(f"V_{{P1+P{j}}}") == P[0] + P[j - 1]
    # the class delta = 1 needs a context with no proper projection above P1:
    # add the Hadamard basis as a second seed
    had = [la.ray_projector(la.ket(v)) for v in ((1, 1, 1, 1), (1, -1, 1, -1), (1, 1, -1, -1), (1, -1, -1, 1))]
    p2 = generate_poset(4, [standard_seed(4), had])
    d2 = dasein_proj_global(P[0], p2)
    assert d2.at("V2") == one
    # exactly the contexts generated by the second seed: none of their atoms is diagonal
    hadamard_side = {c.label for c in p2.contexts if not any(a.is_diagonal() for a in c.atoms)}
    assert {c.label for c in p2.contexts if d2.at(c) == one} == hadamard_side
    assert len(hadamard_side) == 14


# ---------------------------------------------------------------- 4

def _diag(op):
    return tuple(int(x.re) if x.re.denominator == 1 else x.re for x in op.diagonal())


def _pairs(a):
    return la.resolved(a).resolution.pairs


def _random_rational_operator(rng):
    u = rational_rotation(4, rng)
    vals = rng.sample([-3, -1, 0, F(1, 2), 2, 5], rng.choice([2, 3, 4]))
    d = la.diag(*[vals[k % len(vals)] for k in range(4)])
    return la.resolved(u @ d @ u.adjoint())


def test_criterion_4_self_adjoint_daseinisation(p14, sz):
    outer = {lab: _diag(dasein_outer_sa(sz, p14.get(lab))) for lab in PRINTED_OUTER}
    inner = {lab: _diag(dasein_inner_sa(sz, p14.get(lab))) for lab in PRINTED_INNER}
    for lab, printed in PRINTED_OUTER.items():
        assert outer[lab] == DERIVED_OUTER.get(lab, printed), lab
    for lab, printed in PRINTED_INNER.items():
        assert inner[lab] == DERIVED_INNER.get(lab, printed), lab

    # oracle agreement: every context x {S_z, S_z^2, random rational-spectrum operators}
    rng = random.Random(2024)
    ops = [sz, la.resolved(sz @ sz)] + [_random_rational_operator(rng) for _ in range(5)]
    for a in ops:
        pairs = _pairs(a)
        for c in p14.contexts:
            assert outer_values(a, c) == spectral_min_above(pairs, c), c.label
            assert inner_values(a, c) == spectral_max_below(pairs, c), c.label


def test_outer_at_P3P4_pinned_to_derived_value_printed_entry_drops_eigenvalue_minus_two(p14, sz):
    c = p14.get("V_{P3P4}")
    derived = la.diag(*DERIVED_OUTER["V_{P3P4}"])
    printed = la.diag(*PRINTED_OUTER["V_{P3P4}"])
    assert dasein_outer_sa(sz, c) == derived
    # the printed matrix is an upper bound of S_z in V, but not the least one
    assert la.spectral_leq(sz, printed) and la.spectral_leq(derived, printed)
    assert derived != printed


def test_inner_at_P2_pinned_to_derived_value_printed_entry_exceeds_sz(p14, sz):
    c = p14.get("V_{P2}")
    assert _diag(dasein_inner_sa(sz, c)) == (-2, 0, -2, -2)
    printed = la.diag(*PRINTED_INNER["V_{P2}"])
    # diag(2,0,-2,-2) is not in V_{P2} at all: its P1 and P3 entries differ
    assert c.coefficients(printed) is None


def test_inner_at_P4_pinned_to_derived_value_printed_entry_not_below_sz(p14, sz):
    c = p14.get("V_{P4}")
    assert _diag(dasein_inner_sa(sz, c)) == (0, 0, 0, -2)
    assert not la.spectral_leq(la.diag(*PRINTED_INNER["V_{P4}"]), sz)


@pytest.mark.xfail(strict=True, reason="literal printed outer entry at V_{P3P4} is not the spectral-order minimum")
def test_literal_printed_outer_table(p14, sz):
    for lab, printed in PRINTED_OUTER.items():
        assert _diag(dasein_outer_sa(sz, p14.get(lab))) == printed, lab


# ---------------------------------------------------------------- 5

def _unit_states():
    vecs = [(1, 0, 0, 0), (0, 1, 0, 0), (F(1, 2),) * 4, (F(3, 5), F(4, 5), 0, 0),
            (0, F(5, 13), 0, F(12, 13)), (F(1, 2), F(-1, 2), F(1, 2), F(-1, 2)), (F(2, 3), F(1, 3), F(2, 3), 0),
            (F(3, 5), la.Scalar(0, F(4, 5)), 0, 0)]
    return [la.ket(v) for v in vecs]


def test_criterion_5_truth_value_tables(p11, p14):
    # eleven-context table for delta(P4) and psi = e1, both routes
    prop = dasein_proj_global(P[3], p11)
    w, t = pseudo_state(E[0], p11), truth_object(E[0], p11)
    for lab, want in SIEVES_P4_PSI.items():
        assert set(truth_value_pseudostate(prop, w, lab).labels()) == want, lab
        assert set(truth_value_truthobject(prop, t, lab).labels()) == want, lab
    # density example
    rho = la.density([(F(1, 2), E[0]), (F(1, 2), E[3])])
    s = truth_value_truthobject(dasein_proj_global(P[0], p11), truth_object(rho, p11), "V")
    assert set(s.labels()) == SIEVE_P1_RHO_AT_V

    # route equivalence over the full poset
    states = _unit_states()
    props = all_projections(p14) + [la.ray_projector(la.ket(v)) for v in
                                    ((1, 1, 0, 0), (1, -1, 1, 0), (0, 1, 2, 2), (1, 1, 1, -1))]
    props = [q for q in props if not q.is_zero()]
    checked = 0
    for q in props:
        d = dasein_proj_global(q, p14)
        for psi in states:
            w, t = pseudo_state(psi, p14), truth_object(psi, p14)
            for c in p14.contexts:
                assert truth_value_pseudostate(d, w, c) == truth_value_truthobject(d, t, c)
                checked += 1
    assert checked == len(props) * len(states) * len(p14)


# ---------------------------------------------------------------- 6

def _heyting_suite(make, top, bottom, rng, cases=1000):
    strict_lem = strict_dn = 0
    for _ in range(cases):
        a, b, c, root = make(rng)
        bad, lem, dn = check_laws(a, b, c, top(root), bottom(root))
        assert not bad, bad
        strict_lem += lem
        strict_dn += dn
    return strict_lem, strict_dn


def test_criterion_6_heyting_suites(p14):
    rng = random.Random(6)

    def sieves(r):
        root = r.randrange(len(p14))
        dens = r.choice([0.15, 0.3, 0.5])
        return (*(random_sieve(p14, root, r, dens) for _ in range(3)), root)

    lem, dn = _heyting_suite(sieves, lambda v: Sieve.principal(p14, v), lambda v: Sieve.empty(p14, v), rng)
    assert lem > 0 and dn > 0

    def clopens(r):
        dens = r.choice([0.1, 0.25, 0.4])
        return (*(random_clopen(p14, r, dens) for _ in range(3)), None)

    lem, dn = _heyting_suite(clopens, lambda _: ClopenSubobject.full(p14), lambda _: ClopenSubobject.empty(p14), rng)
    assert lem > 0 and dn > 0


# ---------------------------------------------------------------- 7

def _random_density(rng):
    pool = E + [la.ket(v) for v in ((F(1, 2),) * 4, (F(3, 5), 0, F(4, 5), 0), (0, F(5, 13), F(12, 13), 0),
                                    (F(1, 2), F(-1, 2), F(1, 2), F(-1, 2)))]
    picks = rng.sample(pool, rng.randint(1, 4))
    ws = [rng.randint(1, 6) for _ in picks]
    return la.density([(F(w, sum(ws)), v) for w, v in zip(ws, picks)])


def test_criterion_7_measures(p14, p11):
    rng = random.Random(7)
    measures = {}
    for _ in range(200):
        rho = _random_density(rng)
        mu = measures.setdefault(rho, Measure(rho, p14))
        s = random_clopen(p14, rng, rng.choice([0.1, 0.3, 0.5]))
        t = random_clopen(p14, rng, rng.choice([0.1, 0.3, 0.5]))
        disjoint = t & ~s
        rep = check_measure_axioms(mu, [s, t, disjoint], p14)
        assert rep.ok, rep.to_json()
        ms, mt = mu(s), mu(t)
        for i, c in enumerate(p14.contexts):
            assert ms.values[i] == trace_weight(rho, c.projector(s.sel[i]))
            assert mu(s | t).values[i] + mu(s & t).values[i] == ms.values[i] + mt.values[i]
            assert mu(s | disjoint).values[i] == ms.values[i] + mu(disjoint).values[i]
        if s <= t:
            assert all(x <= y for x, y in zip(ms.values, mt.values))

    for rho in list(measures)[:4]:
        m = extract_state_weights(measures[rho], p14)
        assert all(v == trace_weight(rho, q) for q, v in m.items())

    r1 = la.density([(F(3, 4), E[0]), (F(1, 4), E[1])])
    r2 = la.density([(F(3, 5), E[0]), (F(2, 5), E[1])])
    assert truth_separation_witnesses(r1, r2, p11, 1) == []
    assert truth_separation_witnesses(r1, r2, p11, F(7, 10)) != []


# ---------------------------------------------------------------- 8

def _weight_family(p, rng):
    base = [F(rng.randint(0, 8), 8) for _ in p.contexts]
    return OrderReversingWeight(p, [max(base[j] for j in p.up[i]) for i in range(len(p))])


def test_criterion_8_l_map(p14, spin):
    rng = random.Random(8)
    for _ in range(300):
        g1, g2 = _weight_family(p14, rng), _weight_family(p14, rng)
        root = (rng.randrange(len(p14)), F(rng.randint(1, 8), 8))
        assert l_map(g1.join(g2), root) == l_map(g1, root).join(l_map(g2, root))
        assert (l_separation_witness(g1, g2) is None) == (g1 == g2)

    p = spin.poset
    densities = [s for s in spin.states.values() if isinstance(s, la.Operator)]
    assert densities
    for prop in spin.propositions.values():
        d = dasein_proj_global(prop.projector, p)
        for rho in densities:
            gamma = measure(rho, d.subobject)
            for c in p.contexts:
                for r in (F(1, 4), F(1, 2), F(7, 10), 1):
                    assert truth_value_probabilistic(d, rho, (c, r)) == l_map(gamma, (c, r))


# ---------------------------------------------------------------- 9

def _signed_permutations(n):
    for perm in permutations(range(n)):
        for signs in product((1, -1), repeat=n):
            yield la.matrix([[signs[c] if perm[c] == r else 0 for c in range(n)] for r in range(n)])


def test_criterion_9_covariance(p14):
    group = list(_signed_permutations(4))
    assert len(group) == 384
    cases = [
        (P[3], E[0]),
        (P[0] + P[1], la.ket((F(1, 2),) * 4)),
        (la.ray_projector(la.ket((1, 1, 0, 0))), la.ket((F(3, 5), F(4, 5), 0, 0))),
    ]
    for u in group:
        mapping = apply_unitary(p14, u)
        assert sorted(c.label for c in mapping.values()) == sorted(p14.labels())
        for proj, psi in cases:
            for left, right in covariance_report(proj, psi, u, p14):
                assert left == right


# ---------------------------------------------------------------- 10

def _spin_commands(path):
    data = json.loads(path.read_text())
    states = list(data["states"])
    dens = [k for k, v in data["states"].items() if "mixture" in v]
    cmds = [["contexts"], ["-f", "table", "contexts"], ["-f", "dot", "contexts"], ["global-sections"],
            ["ks-check", "kernaghan"]]
    for name in list(data["operators"]) + list(data["propositions"]):
        cmds += [["daseinise", name], ["daseinise", name, "--inner"]]
    for prop in data["propositions"]:
        for st in states:
            cmds.append(["truth-value", prop, st])
        for st in dens:
            cmds.append(["prob-truth", prop, st, "--root", "V,1/2"])
            cmds.append(["measure", st, prop])
        for u in data["unitaries"]:
            cmds.append(["covariance", prop, "psi", u])
    for st in states:
        if st not in dens:
            cmds.append(["pseudo-state", st])
    cmds.append(["value-interval", "Sz", "V:0"])
    return [["-s", str(path)] + c for c in cmds]


def test_criterion_10_determinism(monkeypatch):
    outputs = {}
    for threads in ("1", "4"):
        monkeypatch.setenv("TOPOSQT_THREADS", threads)
        for rep in range(2):
            blob = []
            for name in ("spin.json", "spin_full.json"):
                for argv in _spin_commands(SCENARIOS / name):
                    code, out, err = _cli(*argv)
                    assert code == 0, (argv, err)
                    blob.append(out)
            outputs[(threads, rep)] = "".join(blob).encode()
    first = outputs[("1", 0)]
    assert all(v == first for v in outputs.values())

    # and across separate processes
    argv = ["-s", str(SCENARIOS / "spin_full.json"), "truth-value", "Sz_neg", "phi"]
    seen = set()
    for threads in ("1", "4"):
        env = dict(os.environ, TOPOSQT_THREADS=threads)
        r = subprocess.run([sys.executable, "-m", "toposqt", *argv], capture_output=True, env=env)
        assert r.returncode == 0, r.stderr
        seen.add(r.stdout)
    assert len(seen) == 1


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
