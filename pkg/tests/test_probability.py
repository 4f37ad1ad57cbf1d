import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from toposqt import linalg as la
from toposqt.contexts import generate_poset, standard_seed
from toposqt.dasein import dasein_proj_global
from toposqt.errors import BadThreshold, IllDefined, ValidationError
from toposqt.presheaf import ClopenSubobject, random_clopen
from toposqt.probability import (
    Measure,
    OrderReversingWeight,
    ProductSieve,
    check_measure_axioms,
    extract_state_weights,
    l_map,
    l_separation_witness,
    measure,
    truth_separation_witnesses,
    truth_value_probabilistic,
)

from oracles import trace_weight

E = [[int(i == k) for i in range(4)] for k in range(4)]


def random_density(rng):
    vecs = [la.ket(E[k]) for k in range(4)] + [
        la.ket([F(1, 2)] * 4),
        la.ket([F(3, 5), 0, F(4, 5), 0]),
        la.ket([F(1, 2), F(-1, 2), F(1, 2), F(-1, 2)]),
    ]
    picks = rng.sample(vecs, rng.randint(1, 3))
    ws = [F(rng.randint(1, 5)) for _ in picks]
    tot = sum(ws)
    return la.density([(w / tot, v) for w, v in zip(ws, picks)])


def test_measure_is_trace_of_component(p14):
    rng = random.Random(0)
    rho = random_density(rng)
    s = random_clopen(p14, rng)
    w = measure(rho, s)
    for i, c in enumerate(p14.contexts):
        assert w.values[i] == trace_weight(rho, c.projector(s.sel[i]))


def test_axioms_on_random_samples(p14):
    rng = random.Random(1)
    rho = random_density(rng)
    samples = [random_clopen(p14, rng, rng.choice([0.1, 0.3, 0.6])) for _ in range(15)]
    rep = check_measure_axioms(Measure(rho, p14), samples, p14)
    assert rep.ok, rep.to_json()
    assert rep.checked == 15 * 16 // 2


def test_axiom_checker_catches_a_bad_measure(p14):
    class Bogus:
        def __call__(self, s):
            return OrderReversingWeight(p14, [F(1, 2)] * len(p14))

    rep = check_measure_axioms(Bogus(), [ClopenSubobject.full(p14)], p14)
    assert not rep.ok
    assert {f["law"] for f in rep.failures} >= {"mu(Sigma) = 1", "mu(0) = 0"}


def test_extracted_weights_are_traces(p11):
    rho = la.density([(F(3, 4), E[0]), (F(1, 4), E[1])])
    m = extract_state_weights(Measure(rho, p11), p11)
    for proj, val in m.items():
        assert val == trace_weight(rho, proj)


def test_extraction_rejects_context_dependent_weights(p14):
    class Contextual:
        """A weight that depends on the context, not only on the projection."""

        def __init__(self):
            self.inner = Measure(la.density([(1, E[0])]), p14)

        def __call__(self, s):
            base = list(self.inner(s).values)
            i = p14.index("V_{P2}")
            if s.sel[i] == frozenset({1}):
                base[i] = F(1, 3)
            return OrderReversingWeight(p14, base, validate=False)

    with pytest.raises(IllDefined):
        extract_state_weights(Contextual(), p14)


def test_weight_validation(p11):
    with pytest.raises(ValidationError):
        OrderReversingWeight(p11, [F(1, 2)] + [F(0)] * (len(p11) - 1))
    with pytest.raises(ValidationError):
        OrderReversingWeight(p11, [F(2)] * len(p11))


def _random_weight(p, rng):
    # order-reversing by construction: min over what sits above
    base = [F(rng.randint(0, 6), 6) for _ in p.contexts]
    return OrderReversingWeight(p, [max(base[j] for j in p.up[i]) for i in range(len(p))])


@given(st.integers(0, 2**32))
def test_l_preserves_joins(seed):
    p = generate_poset(4, [standard_seed(4)], closure="singleton")
    rng = random.Random(seed)
    g1, g2 = _random_weight(p, rng), _random_weight(p, rng)
    root = (rng.randrange(len(p)), F(rng.randint(1, 4), 4))
    assert l_map(g1.join(g2), root) == l_map(g1, root).join(l_map(g2, root))


@given(st.integers(0, 2**32))
def test_l_separates_weights(seed):
    p = generate_poset(4, [standard_seed(4)], closure="singleton")
    rng = random.Random(seed)
    g1, g2 = _random_weight(p, rng), _random_weight(p, rng)
    assert (l_separation_witness(g1, g2) is None) == (g1 == g2)


def test_product_sieve_membership_and_restriction(p11):
    g = OrderReversingWeight(p11, [F(1, 2) if c.label == "V" else F(1) for c in p11.contexts])
    s = l_map(g, ("V", F(3, 4)))
    assert s.contains("V", F(1, 2)) and not s.contains("V", F(2, 3))
    assert s.contains("V_{P1}", F(3, 4)) and not s.contains("V_{P1}", 1)
    r = s.restrict("V_{P1P2}", F(1, 2))
    assert r.cutoff == {p11.index(c): F(1, 2) for c in ("V_{P1P2}", "V_{P1}", "V_{P2}")}
    with pytest.raises(BadThreshold):
        l_map(g, ("V", 0))
    with pytest.raises(ValidationError):
        ProductSieve(p11, "V", 1, {"V": F(1, 2)})


def test_probabilistic_truth_value_is_l_of_mu(spin):
    p = spin.poset
    rho = spin.states["rho"]
    for prop in spin.propositions.values():
        d = dasein_proj_global(prop.projector, p)
        for c in p.contexts:
            for r in (F(1, 3), F(1, 2), 1):
                tv = truth_value_probabilistic(d, rho, (c, r))
                assert tv == l_map(measure(rho, d.subobject), (c, r))


def test_threshold_separation(p11):
    r1 = la.density([(F(3, 4), E[0]), (F(1, 4), E[1])])
    r2 = la.density([(F(3, 5), E[0]), (F(2, 5), E[1])])
    assert truth_separation_witnesses(r1, r2, p11, 1) == []
    assert truth_separation_witnesses(r1, r2, p11, F(7, 10))
