"""Exact learning rates for sequential social learning on a digraph.

The engine sweeps the nodes in decision order while keeping, for each value
of the ground truth, the exact joint law of the actions that some later node
still observes (the *frontier*). A node's announcement depends only on the
ground truth and the actions of its earlier in-neighbours, because its
private signal is conditionally independent of everything else. Bayesian
agents compute their likelihood ratio from this same exact law.

Everything up to :func:`mc_estimate` is exact rational arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import Network, Ordering, Rule, format_rational, validate_network

__all__ = [
    "DEFAULT_STATE_CAP",
    "ActionDistribution",
    "DecisionTable",
    "LearningReport",
    "StateExplosion",
    "DegenerateLikelihood",
    "majority_decision",
    "bayes_decision",
    "likelihood_ratio",
    "joint_forward",
    "naive_enumeration_lr",
    "mc_estimate",
]

DEFAULT_STATE_CAP = 24
NAIVE_MAX_NODES = 14
MC_BLOCK = 4096

HALF = Fraction(1, 2)
ONE = Fraction(1)
ZERO = Fraction(0)


class StateExplosion(RuntimeError):
    def __init__(self, width: int, cap: int):
        super().__init__(f"frontier width {width} exceeds the state cap {cap}")
        self.width = width
        self.cap = cap


class DegenerateLikelihood(ZeroDivisionError):
    """Likelihood ratio with a zero denominator. ``infinite`` tells whether
    the numerator is positive (ratio is +inf) or also zero (undefined)."""

    def __init__(self, infinite: bool):
        super().__init__("likelihood ratio has a zero denominator")
        self.infinite = infinite


# -- decision rules -----------------------------------------------------------


def majority_decision(signal: int, neighbor_actions: Sequence[int]) -> Fraction:
    """Probability of announcing 1 under majority dynamics; ties follow the
    agent's own signal."""
    ones = signal + sum(neighbor_actions)
    zeros = 1 + len(neighbor_actions) - ones
    if ones > zeros:
        return ONE
    if ones < zeros:
        return ZERO
    return ONE if signal else ZERO


def bayes_decision(likelihood_ratio: Fraction) -> Fraction:
    """Probability of announcing 1 for a Bayesian agent with uniform prior."""
    if likelihood_ratio < 0:
        raise ValueError("likelihood ratio must be non-negative")
    if likelihood_ratio > 1:
        return ONE
    if likelihood_ratio < 1:
        return ZERO
    return HALF


def _posterior_decision(weight1: Fraction, weight0: Fraction) -> Fraction:
    # weight_t = Pr[theta = t] * Pr[inputs | theta = t]
    if weight1 > weight0:
        return ONE
    if weight1 < weight0:
        return ZERO
    return HALF


# -- data types ---------------------------------------------------------------


@dataclass(frozen=True)
class ActionDistribution:
    """Joint law of the live actions, one table per ground truth value.

    Keys are 0/1 tuples aligned with ``frontier``. Zero-probability keys are
    omitted.
    """

    frontier: tuple[int, ...]
    dist0: Mapping[tuple[int, ...], Fraction]
    dist1: Mapping[tuple[int, ...], Fraction]

    @classmethod
    def empty(cls) -> "ActionDistribution":
        return cls((), {(): ONE}, {(): ONE})

    def table(self, theta: int) -> Mapping[tuple[int, ...], Fraction]:
        return self.dist1 if theta else self.dist0

    def marginal(self, nodes: Sequence[int], theta: int) -> dict[tuple[int, ...], Fraction]:
        pos = [self.frontier.index(v) for v in nodes]
        out: dict[tuple[int, ...], Fraction] = {}
        for key, w in self.table(theta).items():
            sub = tuple(key[i] for i in pos)
            out[sub] = out.get(sub, ZERO) + w
        return out

    def probability(self, nodes: Sequence[int], actions: Sequence[int], theta: int) -> Fraction:
        return self.marginal(nodes, theta).get(tuple(actions), ZERO)


@dataclass(frozen=True)
class DecisionTable:
    """Per node: earlier in-neighbours in rank order, and the probability
    of announcing 1 for every ``(signal, neighbour actions)`` input."""

    inputs: tuple[tuple[int, ...], ...]
    entries: tuple[Mapping[tuple[int, tuple[int, ...]], Fraction], ...]

    def prob_one(self, v: int, signal: int, neighbor_actions: Sequence[int]) -> Fraction:
        return self.entries[v][(signal, tuple(neighbor_actions))]


@dataclass(frozen=True)
class LearningReport:
    success: tuple[Fraction, ...]

    @property
    def clr(self) -> Fraction:
        return sum(self.success, ZERO)

    @property
    def lr(self) -> Fraction:
        return self.clr / len(self.success)

    def subset_clr(self, nodes) -> Fraction:
        return sum((self.success[v] for v in nodes), ZERO)

    def to_json(self) -> dict:
        return {
            "n": len(self.success),
            "success": [format_rational(s) for s in self.success],
            "clr": format_rational(self.clr),
            "lr": format_rational(self.lr),
            "success_decimal": [float(s) for s in self.success],
            "clr_decimal": float(self.clr),
            "lr_decimal": float(self.lr),
        }


# -- helpers ------------------------------------------------------------------


def _prepare(network: Network, ordering: Ordering, accuracies: Optional[Mapping[int, Fraction]]):
    problems = validate_network(network)
    if problems:
        raise ValueError("invalid network: " + "; ".join(problems))
    if sorted(ordering.sequence) != list(range(network.n)):
        raise ValueError(f"ordering of length {len(ordering)} is not a permutation of 0..{network.n - 1}")
    acc = [network.p] * network.n
    for v, a in (accuracies or {}).items():
        a = Fraction(a)
        if not (0 <= a <= 1):
            raise ValueError(f"accuracy {a} of node {v} outside [0, 1]")
        acc[v] = a
    rank = ordering.ranks
    earlier = [
        tuple(sorted((u for u in network.in_neighbors[v] if rank[u] < rank[v]), key=rank.__getitem__))
        for v in range(network.n)
    ]
    return acc, rank, earlier


def _signal_prob(acc: Fraction, signal: int, theta: int) -> Fraction:
    return acc if signal == theta else 1 - acc


def likelihood_ratio(
    network: Network,
    before: ActionDistribution,
    v: int,
    signal: int,
    neighbor_actions: Sequence[int],
    neighbors: Optional[Sequence[int]] = None,
    accuracy: Optional[Fraction] = None,
) -> Fraction:
    """``Pr[X_v | theta=1] / Pr[X_v | theta=0]`` from the pre-update law.

    ``neighbors`` defaults to v's in-neighbours present in the frontier, in
    frontier order; pass them explicitly to match ``neighbor_actions``.
    Raises :class:`DegenerateLikelihood` when the denominator vanishes.
    """
    if neighbors is None:
        neighbors = [u for u in before.frontier if u in network.in_neighbors[v]]
    missing = [u for u in neighbors if u not in before.frontier]
    if missing:
        raise ValueError(f"in-neighbours {missing} of node {v} are not in the frontier")
    p = network.p if accuracy is None else accuracy
    num = _signal_prob(p, signal, 1) * before.probability(neighbors, neighbor_actions, 1)
    den = _signal_prob(p, signal, 0) * before.probability(neighbors, neighbor_actions, 0)
    if den == 0:
        raise DegenerateLikelihood(infinite=num > 0)
    return num / den


# -- exact engine -------------------------------------------------------------


def joint_forward(
    network: Network,
    ordering: Ordering,
    rule: Rule,
    *,
    cap: int = DEFAULT_STATE_CAP,
    accuracies: Optional[Mapping[int, Fraction]] = None,
    trace: Optional[list] = None,
) -> tuple[LearningReport, DecisionTable]:
    """Exact per-node success probabilities and the decision table used.

    ``accuracies`` overrides the signal accuracy of individual nodes; it
    exists so that gadget formulas with arbitrary feeding accuracies can be
    checked, and defaults to the homogeneous ``network.p``. If ``trace`` is
    a list, the peak frontier width is appended to it.
    """
    rule = Rule.parse(rule)
    acc, rank, earlier = _prepare(network, ordering, accuracies)
    q = network.q
    pending = [sum(1 for w in network.out_neighbors[v] if rank[w] > rank[v]) for v in range(network.n)]

    frontier: list[int] = []
    tables = [{(): ONE}, {(): ONE}]
    success = [ZERO] * network.n
    entries: list[dict] = [{} for _ in range(network.n)]
    peak = 0

    for v in ordering.sequence:
        nbrs = earlier[v]
        pos = [frontier.index(u) for u in nbrs]
        marg = []
        for t in (0, 1):
            m: dict[tuple[int, ...], Fraction] = {}
            for key, w in tables[t].items():
                sub = tuple(key[i] for i in pos)
                m[sub] = m.get(sub, ZERO) + w
            marg.append(m)

        pv = acc[v]
        table = entries[v]
        for u in itertools.product((0, 1), repeat=len(nbrs)):
            for s in (0, 1):
                if rule is Rule.MAJORITY:
                    table[(s, u)] = majority_decision(s, u)
                else:
                    w1 = q * _signal_prob(pv, s, 1) * marg[1].get(u, ZERO)
                    w0 = (1 - q) * _signal_prob(pv, s, 0) * marg[0].get(u, ZERO)
                    table[(s, u)] = _posterior_decision(w1, w0)

        # Pr[a_v = 1 | theta, u]
        act1 = [
            {u: _signal_prob(pv, 1, t) * table[(1, u)] + _signal_prob(pv, 0, t) * table[(0, u)] for u in marg[t]}
            for t in (0, 1)
        ]
        success[v] = q * sum((marg[1][u] * act1[1][u] for u in marg[1]), ZERO) + (1 - q) * sum(
            (marg[0][u] * (1 - act1[0][u]) for u in marg[0]), ZERO
        )

        width = len(frontier) + 1
        peak = max(peak, width)
        if width > cap:
            raise StateExplosion(width, cap)
        new_tables = []
        for t in (0, 1):
            nt: dict[tuple[int, ...], Fraction] = {}
            for key, w in tables[t].items():
                a1 = act1[t][tuple(key[i] for i in pos)]
                if a1:
                    nt[key + (1,)] = w * a1
                if a1 != 1:
                    nt[key + (0,)] = w * (1 - a1)
            new_tables.append(nt)
        tables = new_tables
        frontier.append(v)

        for u in nbrs:
            pending[u] -= 1
        drop = sorted(w for w in frontier if pending[w] == 0)
        if drop:
            keep = [i for i, w in enumerate(frontier) if pending[w] > 0]
            frontier = [frontier[i] for i in keep]
            for t in (0, 1):
                nt = {}
                for key, w in tables[t].items():
                    sub = tuple(key[i] for i in keep)
                    nt[sub] = nt.get(sub, ZERO) + w
                tables[t] = nt

    if trace is not None:
        trace.append(peak)
    report = LearningReport(tuple(success))
    return report, DecisionTable(tuple(earlier), tuple(entries))


def forward_distributions(network: Network, ordering: Ordering, rule: Rule, **kw) -> list[ActionDistribution]:
    """Frontier law before each node in ``ordering`` plus the final law,
    without eliminating any coordinate. Intended for small networks only."""
    rule = Rule.parse(rule)
    report, dt = joint_forward(network, ordering, rule, **kw)
    acc, _, earlier = _prepare(network, ordering, kw.get("accuracies"))
    states = [ActionDistribution.empty()]
    for v in ordering.sequence:
        cur = states[-1]
        pos = [cur.frontier.index(u) for u in earlier[v]]
        tabs = []
        for t in (0, 1):
            nt = {}
            for key, w in cur.table(t).items():
                u = tuple(key[i] for i in pos)
                a1 = sum(_signal_prob(acc[v], s, t) * dt.entries[v][(s, u)] for s in (0, 1))
                if a1:
                    nt[key + (1,)] = w * a1
                if a1 != 1:
                    nt[key + (0,)] = w * (1 - a1)
            tabs.append(nt)
        states.append(ActionDistribution(cur.frontier + (v,), tabs[0], tabs[1]))
    return states


# -- independent oracle -------------------------------------------------------


def naive_enumeration_lr(
    network: Network,
    ordering: Ordering,
    rule: Rule,
    *,
    max_nodes: int = NAIVE_MAX_NODES,
    accuracies: Optional[Mapping[int, Fraction]] = None,
) -> LearningReport:
    """Learning report by brute force over the ground truth and all 2^n
    signal vectors, carrying tie-break coins as exact branch weights.

    Bayesian decisions are made by summing the weight of every full world
    consistent with the agent's inputs, so nothing is shared with the
    frontier bookkeeping of :func:`joint_forward`.
    """
    rule = Rule.parse(rule)
    if network.n > max_nodes:
        raise ValueError(f"naive enumeration refuses n={network.n} > {max_nodes}")
    acc, _, earlier = _prepare(network, ordering, accuracies)
    n, q = network.n, network.q

    # world key: (theta, signals, actions-by-node with -1 = not yet announced)
    worlds: dict[tuple, Fraction] = {}
    for theta in (0, 1):
        prior = q if theta else 1 - q
        for signals in itertools.product((0, 1), repeat=n):
            w = prior
            for v in range(n):
                w *= _signal_prob(acc[v], signals[v], theta)
            if w:
                worlds[(theta, signals, (-1,) * n)] = w

    for v in ordering.sequence:
        nbrs = earlier[v]
        if rule is Rule.BAYESIAN:
            evidence: dict[tuple, Fraction] = {}
            for (theta, signals, actions), w in worlds.items():
                k = (theta, signals[v], tuple(actions[u] for u in nbrs))
                evidence[k] = evidence.get(k, ZERO) + w
        nxt: dict[tuple, Fraction] = {}
        for (theta, signals, actions), w in worlds.items():
            s = signals[v]
            u = tuple(actions[x] for x in nbrs)
            if rule is Rule.MAJORITY:
                d = majority_decision(s, u)
            else:
                d = _posterior_decision(evidence.get((1, s, u), ZERO), evidence.get((0, s, u), ZERO))
            for a, pa in ((1, d), (0, 1 - d)):
                if pa:
                    key = (theta, signals, actions[:v] + (a,) + actions[v + 1 :])
                    nxt[key] = nxt.get(key, ZERO) + w * pa
        worlds = nxt

    success = [ZERO] * n
    for (theta, _, actions), w in worlds.items():
        for v in range(n):
            if actions[v] == theta:
                success[v] += w
    return LearningReport(tuple(success))


# -- Monte Carlo --------------------------------------------------------------


def _table_arrays(table: DecisionTable) -> list[np.ndarray]:
    # index = signal + 2 * (bits of neighbour actions, first neighbour most significant)
    arrays = []
    for v, nbrs in enumerate(table.inputs):
        k = len(nbrs)
        arr = np.empty(2 ** (k + 1))
        for u in itertools.product((0, 1), repeat=k):
            idx = 0
            for b in u:
                idx = 2 * idx + b
            for s in (0, 1):
                arr[s + 2 * idx] = float(table.entries[v][(s, u)])
        arrays.append(arr)
    return arrays


def _mc_block(network, ordering, table_arrays, inputs, p_values, q, seed, block, size):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))
    theta = (rng.random(size) < q).astype(np.int64)
    n = network.n
    actions = np.zeros((n, size), dtype=np.int64)
    correct = np.zeros(size)
    for v in ordering.sequence:
        right = rng.random(size) < p_values[v]
        signal = np.where(right, theta, 1 - theta)
        idx = np.zeros(size, dtype=np.int64)
        for u in inputs[v]:
            idx = 2 * idx + actions[u]
        prob = table_arrays[v][signal + 2 * idx]
        coin = rng.random(size)
        actions[v] = (coin < prob).astype(np.int64)
        correct += actions[v] == theta
    return correct / n


def mc_estimate(
    network: Network,
    ordering: Ordering,
    rule: Rule,
    samples: int,
    seed: int,
    *,
    table: Optional[DecisionTable] = None,
    accuracies: Optional[Mapping[int, Fraction]] = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of the learning rate and its standard error.

    Decisions come from the exact :class:`DecisionTable`; only signals, the
    ground truth and Bayesian tie coins are sampled. Samples are drawn in
    fixed blocks, each from its own Philox stream keyed by ``(seed, block)``,
    so the result depends only on ``seed`` and ``samples``.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    if table is None:
        _, table = joint_forward(network, ordering, rule, accuracies=accuracies)
    acc, _, _ = _prepare(network, ordering, accuracies)
    arrays = _table_arrays(table)
    p_values = [float(a) for a in acc]
    per_sample = []
    for block in range(math.ceil(samples / MC_BLOCK)):
        size = min(MC_BLOCK, samples - block * MC_BLOCK)
        per_sample.append(
            _mc_block(network, ordering, arrays, table.inputs, p_values, float(network.q), seed, block, size)
        )
    values = np.concatenate(per_sample)
    estimate = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return estimate, stderr
