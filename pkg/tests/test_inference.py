import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cell_network, random_instance
from seqlearn.inference import (
    DegenerateLikelihood,
    StateExplosion,
    bayes_decision,
    forward_distributions,
    joint_forward,
    likelihood_ratio,
    majority_decision,
    mc_estimate,
    naive_enumeration_lr,
)
from seqlearn.model import CnfFormula, Network, Ordering, Rule
from seqlearn.reduction import build_formula_graph, canonical_ordering
from seqlearn.model import Assignment

HALF = Fraction(1, 2)
P34 = Fraction(3, 4)
accuracies = st.fractions(min_value=HALF, max_value=1, max_denominator=40)


class TestDecisionRules:
    @pytest.mark.parametrize(
        "signal, nbrs, want",
        [(1, [0, 0], 0), (1, [0], 1), (0, [1, 1, 0], 0), (0, [1], 0), (1, [], 1), (0, [1, 1], 1)],
    )
    def test_majority(self, signal, nbrs, want):
        assert majority_decision(signal, nbrs) == want

    def test_bayes(self):
        assert bayes_decision(Fraction(63, 5)) == 1
        assert bayes_decision(Fraction(1)) == HALF
        assert bayes_decision(Fraction(1, 3)) == 0
        with pytest.raises(ValueError):
            bayes_decision(Fraction(-1))

    def test_cell_case_one_ratio(self):
        p = P34
        lam = (p / (1 - p)) ** 2 * (HALF + p / 2) / (1 - p / 2)
        assert lam == Fraction(63, 5)


class TestLikelihoodRatio:
    def _before_not_x(self, p):
        net = cell_network(p)
        return net, forward_distributions(net, Ordering((0, 1, 2)), Rule.BAYESIAN)[2]

    @pytest.mark.parametrize("p", [Fraction(3, 5), P34, Fraction(9, 10)])
    def test_cell_case_two(self, p):
        net, before = self._before_not_x(p)
        lam = likelihood_ratio(net, before, 2, 1, (1, 0), neighbors=(1, 0))
        assert lam == p / (1 - p)

    def test_cell_case_two_at_three_quarters(self):
        net, before = self._before_not_x(P34)
        assert likelihood_ratio(net, before, 2, 1, (1, 0), neighbors=(1, 0)) == 3

    def test_cell_case_one(self):
        net, before = self._before_not_x(P34)
        assert likelihood_ratio(net, before, 2, 1, (1, 1), neighbors=(1, 0)) == Fraction(63, 5)

    def test_signal_only(self):
        net = Network(1, (), HALF, P34)
        before = forward_distributions(net, Ordering((0,)), Rule.BAYESIAN)[0]
        assert likelihood_ratio(net, before, 0, 1, ()) == 3

    def test_degenerate(self):
        net = Network(1, (), HALF, Fraction(1))
        before = forward_distributions(net, Ordering((0,)), Rule.BAYESIAN)[0]
        with pytest.raises(DegenerateLikelihood) as info:
            likelihood_ratio(net, before, 0, 1, ())
        assert info.value.infinite


class TestJointForward:
    @pytest.mark.parametrize("rule", list(Rule))
    def test_single_node(self, rule):
        rep, _ = joint_forward(Network(1, (), HALF, P34), Ordering((0,)), rule)
        assert rep.success == (P34,) and rep.lr == P34

    def test_bayesian_cell(self):
        rep, _ = joint_forward(cell_network(P34), Ordering((0, 1, 2)), Rule.BAYESIAN)
        assert rep.success == (P34, P34, Fraction(51, 64))
        assert rep.clr == Fraction(147, 64)

    def test_majority_cell(self):
        rep, _ = joint_forward(cell_network(P34), Ordering((0, 1, 2)), Rule.MAJORITY)
        assert rep.success == (P34, P34, Fraction(27, 32))
        assert rep.clr == Fraction(75, 32)

    def test_report_json(self):
        rep, _ = joint_forward(cell_network(P34), Ordering((0, 1, 2)), Rule.BAYESIAN)
        doc = rep.to_json()
        assert doc["clr"] == "147/64" and doc["lr"] == "49/64"

    def test_bad_ordering(self):
        with pytest.raises(ValueError):
            joint_forward(cell_network(P34), Ordering((0, 1)), Rule.BAYESIAN)

    def test_state_cap(self):
        n = 6
        edges = tuple((u, n) for u in range(n))
        net = Network(n + 1, edges, HALF, P34)
        with pytest.raises(StateExplosion) as info:
            joint_forward(net, Ordering(tuple(range(n + 1))), Rule.MAJORITY, cap=4)
        assert info.value.width == 5

    def test_decision_table_values_and_flip_symmetry(self, rng):
        for _ in range(30):
            net, order = random_instance(rng, 1, 7)
            for rule in Rule:
                _, table = joint_forward(net, order, rule)
                for entries in table.entries:
                    for (s, u), d in entries.items():
                        assert d in (0, HALF, 1)
                        flipped = (1 - s, tuple(1 - a for a in u))
                        assert entries[flipped] == 1 - d

    @pytest.mark.parametrize("rule", list(Rule))
    def test_general_prior_against_oracle(self, rule, rng):
        for _ in range(25):
            net, order = random_instance(rng, 1, 6, q=Fraction(rng.randint(1, 9), 10))
            assert joint_forward(net, order, rule)[0] == naive_enumeration_lr(net, order, rule)


class TestOracleEquivalence:
    @pytest.mark.parametrize("rule", list(Rule))
    def test_random_instances(self, rule, rng):
        for _ in range(60):
            net, order = random_instance(rng, 1, 8)
            assert joint_forward(net, order, rule)[0] == naive_enumeration_lr(net, order, rule)

    @settings(max_examples=40, deadline=None)
    @given(st.randoms(use_true_random=False), st.sampled_from(list(Rule)))
    def test_hypothesis_instances(self, r, rule):
        net, order = random_instance(r, 1, 6)
        assert joint_forward(net, order, rule)[0] == naive_enumeration_lr(net, order, rule)

    def test_oracle_size_guard(self):
        net = Network(15, (), HALF, P34)
        with pytest.raises(ValueError):
            naive_enumeration_lr(net, Ordering(tuple(range(15))), Rule.MAJORITY)

    def test_accuracy_override(self, rng):
        for _ in range(20):
            net, order = random_instance(rng, 2, 6)
            acc = {v: Fraction(rng.randint(50, 100), 100) for v in range(net.n) if rng.random() < 0.5}
            for rule in Rule:
                a = joint_forward(net, order, rule, accuracies=acc)[0]
                assert a == naive_enumeration_lr(net, order, rule, accuracies=acc)


class TestStructuralProperties:
    def test_bayesian_copy_dominance(self, rng):
        for _ in range(150):
            net, order = random_instance(rng, 2, 8)
            rep = joint_forward(net, order, Rule.BAYESIAN)[0]
            for u, v in net.edges:
                if order.rank(u) < order.rank(v):
                    assert rep.success[v] >= rep.success[u]

    def test_majority_violates_copy_dominance(self):
        witness = find_majority_witness(random.Random(3))
        assert witness is not None
        net, order, (u, v), rep = witness
        assert order.rank(u) < order.rank(v) and (u, v) in net.edges
        assert rep.success[v] < rep.success[u]
        assert rep == naive_enumeration_lr(net, order, Rule.MAJORITY)

    def test_component_independence(self, rng):
        for _ in range(25):
            a, oa = random_instance(rng, 1, 4)
            b, ob = random_instance(rng, 1, 4)
            b = Network(b.n, b.edges, b.q, a.p)
            edges = a.edges + tuple((u + a.n, v + a.n) for u, v in b.edges)
            joint = Network(a.n + b.n, edges, a.q, a.p)
            seq = list(oa.sequence) + [v + a.n for v in ob.sequence]
            # a random interleaving preserving both relative orders
            mixed = sorted(range(len(seq)), key=lambda i: (rng.random(), i))
            slots = sorted(mixed[: a.n])
            inter = [None] * len(seq)
            it_a, it_b = iter(oa.sequence), iter(v + a.n for v in ob.sequence)
            for i in range(len(seq)):
                inter[i] = next(it_a) if i in slots else next(it_b)
            for rule in Rule:
                alone = joint_forward(a, oa, rule)[0].success
                together = joint_forward(joint, Ordering(tuple(inter)), rule)[0].success
                assert together[: a.n] == alone

    def test_flip_mirror_of_distributions(self, rng):
        for _ in range(20):
            net, order = random_instance(rng, 1, 6)
            for rule in Rule:
                for dist in forward_distributions(net, order, rule):
                    assert sum(dist.dist0.values()) == 1 and sum(dist.dist1.values()) == 1
                    for key, w in dist.dist1.items():
                        assert dist.dist0.get(tuple(1 - b for b in key), 0) == w

    @pytest.mark.parametrize("p, lr", [(HALF, HALF), (Fraction(1), Fraction(1))])
    def test_endpoints(self, p, lr, rng):
        for _ in range(20):
            net, order = random_instance(rng, 1, 8)
            for rule in Rule:
                rep = joint_forward(net.with_p(p), order, rule)[0]
                assert set(rep.success) == {lr}

    @pytest.mark.parametrize("rule", list(Rule))
    def test_gadget_frontier_stays_small(self, rule, rng):
        from conftest import random_formula
        from seqlearn.search import gadget_subnetwork

        for _ in range(4):
            phi = random_formula(rng, 3, 6, 2, 6)
            g = build_formula_graph(phi, rule)
            bits = tuple(rng.random() < 0.5 for _ in range(phi.num_vars))
            rank = canonical_ordering(g, Assignment(bits)).ranks
            for c in range(phi.num_clauses):
                sub, nodes = gadget_subnetwork(g, c)
                assert sub.n <= 14
                seq = sorted(range(sub.n), key=lambda i: rank[nodes[i]])
                trace = []
                joint_forward(sub, Ordering(tuple(seq)), rule, trace=trace)
                assert trace[0] <= 14


def find_majority_witness(rng, tries=2000):
    for _ in range(tries):
        net, order = random_instance(rng, 2, 5)
        rep = joint_forward(net, order, Rule.MAJORITY)[0]
        for u, v in net.edges:
            if order.rank(u) < order.rank(v) and rep.success[v] < rep.success[u]:
                return net, order, (u, v), rep
    return None


class TestMonteCarlo:
    def test_majority_cell_within_three_stderr(self):
        est, err = mc_estimate(cell_network(P34), Ordering((0, 1, 2)), Rule.MAJORITY, 100_000, seed=11)
        assert abs(est - 25 / 32) <= 3 * err

    def test_perfect_signals(self):
        for seed in (0, 1, 2):
            est, err = mc_estimate(cell_network(1), Ordering((0, 1, 2)), Rule.BAYESIAN, 5000, seed)
            assert est == 1.0 and err == 0.0

    def test_deterministic(self):
        args = (cell_network(P34), Ordering((0, 1, 2)), Rule.BAYESIAN, 10_000)
        assert mc_estimate(*args, seed=5) == mc_estimate(*args, seed=5)
        assert mc_estimate(*args, seed=5) != mc_estimate(*args, seed=6)

    def test_prefix_consistency(self):
        # block streams are keyed by (seed, block), so the first block of a
        # longer run is the same sample set as a one-block run
        from seqlearn.inference import MC_BLOCK

        args = (cell_network(P34), Ordering((0, 1, 2)), Rule.MAJORITY)
        one, _ = mc_estimate(*args, MC_BLOCK, seed=9)
        two, _ = mc_estimate(*args, 2 * MC_BLOCK, seed=9)
        other, _ = mc_estimate(*args, 2 * MC_BLOCK, seed=9)
        assert two == other and one != two

    def test_zero_samples(self):
        with pytest.raises(ValueError):
            mc_estimate(cell_network(P34), Ordering((0, 1, 2)), Rule.BAYESIAN, 0, seed=1)
