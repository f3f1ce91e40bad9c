"""Exhaustive and structured searches over orderings, gadget placements and
assignments, and the end-to-end decision procedure."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from typing import Optional

from .gadgets import ClauseState, analytic_network_lr, decision_threshold, node_count, threshold_p
from .inference import DEFAULT_STATE_CAP, joint_forward
from .model import Assignment, CnfFormula, FormulaGraph, Network, Ordering, Rule, as_rational
from .reduction import build_formula_graph, canonical_ordering, count_satisfied, is_satisfiable

__all__ = [
    "SearchLimitError",
    "ReductionViolation",
    "OrderingSearchResult",
    "PlacementResult",
    "AssignmentSearchResult",
    "Decision",
    "exhaustive_ordering_search",
    "gadget_placement_search",
    "gadget_subnetwork",
    "single_gadget_search",
    "assignment_search",
    "decide_network_learning",
]

ANALYTIC_MAX_VARS = 24


class SearchLimitError(ValueError):
    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required


class ReductionViolation(AssertionError):
    """The learning-rate verdict disagreed with boolean satisfiability."""


@dataclass(frozen=True)
class OrderingSearchResult:
    best: Ordering
    lr: Fraction
    argmax_count: int

    @property
    def clr(self) -> Fraction:
        return self.lr * len(self.best)


def _subnetwork(network: Network, nodes) -> tuple[Network, list[int]]:
    """Induced subnetwork on ``nodes`` (sorted), relabelled densely."""
    nodes = sorted(nodes)
    index = {v: i for i, v in enumerate(nodes)}
    edges = tuple((index[u], index[v]) for u, v in network.edges if u in index and v in index)
    return Network(len(nodes), edges, network.q, network.p), nodes


def _merge_lexmin(comp_orders: list[list[tuple[int, ...]]]) -> tuple[int, ...]:
    # Greedy: the smallest node that can come next in some surviving argmax
    # ordering of its component; every such choice stays completable.
    alive = [list(opts) for opts in comp_orders]
    pos = [0] * len(alive)
    total = sum(len(opts[0]) for opts in alive)
    seq: list[int] = []
    while len(seq) < total:
        best = None
        for c, opts in enumerate(alive):
            if pos[c] < len(opts[0]):
                v = min(o[pos[c]] for o in opts)
                if best is None or v < best[0]:
                    best = (v, c)
        v, c = best
        alive[c] = [o for o in alive[c] if o[pos[c]] == v]
        pos[c] += 1
        seq.append(v)
    return tuple(seq)


def exhaustive_ordering_search(
    network: Network, rule: Rule, limit: int = 8, *, cap: int = DEFAULT_STATE_CAP
) -> OrderingSearchResult:
    """Maximise the learning rate over all ``n!`` orderings.

    Success probabilities inside a weakly connected component depend only
    on the relative order of that component's nodes, so each component is
    searched on its own and the interleavings are counted, not enumerated.
    Among maximisers the lexicographically smallest ordering is reported.
    """
    rule = Rule.parse(rule)
    if network.n > limit:
        raise SearchLimitError(f"network has {network.n} nodes; raise limit to at least {network.n}", network.n)
    if network.n == 0:
        raise ValueError("empty network")
    comp_best: list[list[tuple[int, ...]]] = []
    total = Fraction(0)
    count = math.factorial(network.n)
    for comp in network.weak_components():
        sub, nodes = _subnetwork(network, comp)
        best_clr, best_orders = None, []
        for perm in permutations(range(sub.n)):
            clr = joint_forward(sub, Ordering(perm), rule, cap=cap)[0].clr
            if best_clr is None or clr > best_clr:
                best_clr, best_orders = clr, [perm]
            elif clr == best_clr:
                best_orders.append(perm)
        total += best_clr
        count = count // math.factorial(sub.n) * len(best_orders)
        comp_best.append([tuple(nodes[i] for i in perm) for perm in best_orders])
    best = _merge_lexmin(comp_best)
    return OrderingSearchResult(Ordering(best), total / network.n, count)


def single_gadget_search(graph: FormulaGraph, rule: Rule) -> OrderingSearchResult:
    """Exhaustive search on a one-clause formula graph over orderings that
    announce every cell before the gadget and the gadget dummies before the
    gadget literal nodes.

    Inside that family every cell order and every gadget literal order is
    tried; cells are then concatenated in variable order, which loses
    nothing because cells are only observed by the gadget. The count is
    over the pruned family.
    """
    rule = Rule.parse(rule)
    if graph.num_clauses != 1:
        raise ValueError("single_gadget_search needs a one-clause formula graph")
    cells = [graph.cell(x) for x in range(1, graph.num_vars + 1)]
    dummies = graph.gadget_dummies(0)
    best_clr, best = None, []
    for cell_orders in product(*[permutations(c) for c in cells]):
        prefix = sum(cell_orders, ()) + tuple(dummies)
        for tail in permutations(graph.gadget_literals(0)):
            seq = prefix + tail
            clr = joint_forward(graph.network, Ordering(seq), rule)[0].clr
            if best_clr is None or clr > best_clr:
                best_clr, best = clr, [seq]
            elif clr == best_clr:
                best.append(seq)
    return OrderingSearchResult(Ordering(min(best)), best_clr / graph.network.n, len(best))


@dataclass(frozen=True)
class PlacementResult:
    """Gadget CLR for every announcing order of the three gadget literal
    nodes, keyed by the slot sequence."""

    state: ClauseState
    best: tuple[int, int, int]
    values: dict[tuple[int, int, int], Fraction]

    def distinguished_position(self) -> Optional[int]:
        """Announcing position of the lone on (or lone off) literal in the
        best placement; ``None`` when no literal is distinguished."""
        flags = self.state.flags
        if self.state.on_count == 1:
            return [flags[s] for s in self.best].index(True)
        if self.state.on_count == 2:
            return [flags[s] for s in self.best].index(False)
        return None


_SINGLE_CLAUSE = CnfFormula.from_ints(3, [[1, 2, 3]])


def gadget_placement_search(state: ClauseState, rule: Rule, p) -> PlacementResult:
    """Evaluate all orders of a single gadget's literal nodes on a 1-clause
    formula graph whose cells are pinned to ``state``; the lexicographically
    smallest maximiser is reported."""
    rule = Rule.parse(rule)
    graph = build_formula_graph(_SINGLE_CLAUSE, rule, as_rational(p))
    base = canonical_ordering(graph, Assignment(state.flags)).sequence
    lits = graph.gadget_literals(0)
    prefix = [v for v in base if v not in lits]
    values = {}
    for perm in permutations(range(3)):
        order = Ordering(tuple(prefix + [lits[s] for s in perm]))
        values[perm] = joint_forward(graph.network, order, rule)[0].subset_clr(graph.gadget_nodes(0))
    top = max(values.values())
    best = min(perm for perm, v in values.items() if v == top)
    return PlacementResult(state, best, values)


def gadget_subnetwork(graph: FormulaGraph, clause: int) -> tuple[Network, list[int]]:
    """The gadget of ``clause`` together with its three feeding cells."""
    nodes = set(graph.gadget_nodes(clause))
    for s in range(3):
        nodes.update(graph.cell(graph.clause_slots[(clause, s)].var))
    return _subnetwork(graph.network, nodes)


@dataclass(frozen=True)
class AssignmentSearchResult:
    best: Assignment
    lr: Fraction
    satisfied: int


def _exact_assignment_clr(graph: FormulaGraph, assignment: Assignment, rule: Rule, cache: dict) -> Fraction:
    order = canonical_ordering(graph, assignment)
    rank = order.ranks
    total = Fraction(0)
    for x in range(1, graph.num_vars + 1):
        key = ("cell", assignment.values[x - 1])
        if key not in cache:
            sub, nodes = _subnetwork(graph.network, graph.cell(x))
            seq = sorted(range(sub.n), key=lambda i: rank[nodes[i]])
            cache[key] = joint_forward(sub, Ordering(tuple(seq)), rule)[0].clr
        total += cache[key]
    for c in range(graph.num_clauses):
        flags = tuple(graph.clause_slots[(c, s)].is_true(assignment) for s in range(3))
        key = ("gadget", flags)
        if key not in cache:
            sub, nodes = gadget_subnetwork(graph, c)
            seq = sorted(range(sub.n), key=lambda i: rank[nodes[i]])
            report = joint_forward(sub, Ordering(tuple(seq)), rule)[0]
            gadget = set(graph.gadget_nodes(c))
            cache[key] = report.subset_clr(i for i in range(sub.n) if nodes[i] in gadget)
        total += cache[key]
    return total


def assignment_search(formula: CnfFormula, rule: Rule, p, mode: str = "analytic") -> AssignmentSearchResult:
    """Maximise the canonical-ordering learning rate over all ``2^N``
    assignments.

    ``analytic`` sums closed-form cell and clause rates; ``exact`` runs the
    engine on each cell and each gadget (with its feeding cells) separately,
    which is exact because gadgets share no vertices. Ties go to the
    lexicographically smallest assignment, false before true.
    """
    rule = Rule.parse(rule)
    p = as_rational(p)
    if mode not in ("analytic", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    if formula.num_vars > ANALYTIC_MAX_VARS:
        raise SearchLimitError(
            f"{formula.num_vars} variables exceed the enumeration limit {ANALYTIC_MAX_VARS}", formula.num_vars
        )
    n = node_count(rule, formula.num_vars, formula.num_clauses)
    graph = build_formula_graph(formula, rule, p) if mode == "exact" else None
    cache: dict = {}
    best = None
    for bits in product((False, True), repeat=formula.num_vars):
        a = Assignment(bits)
        if mode == "analytic":
            lr = analytic_network_lr(formula, a, rule, p)
        else:
            lr = _exact_assignment_clr(graph, a, rule, cache) / n
        if best is None or lr > best[1]:
            best = (a, lr)
    return AssignmentSearchResult(best[0], best[1], count_satisfied(formula, best[0]))


@dataclass(frozen=True)
class Decision:
    satisfiable: bool
    lr_star: Fraction
    tau: Fraction
    epsilon: Fraction
    p_used: Fraction
    best_assignment: Assignment
    boolean_satisfiable: bool

    @property
    def margin(self) -> Fraction:
        return self.lr_star - self.tau

    @property
    def consistent(self) -> bool:
        return self.satisfiable == self.boolean_satisfiable


def decide_network_learning(formula: CnfFormula, rule: Rule, *, check: bool = True) -> Decision:
    """Decide satisfiability through the learning-rate threshold at the
    separation accuracy, cross-checked against brute-force satisfiability.

    With ``check`` (the default) a disagreement raises
    :class:`ReductionViolation`; otherwise it is reported in the result.
    """
    rule = Rule.parse(rule)
    p_used = threshold_p(rule, formula.num_clauses)
    tau, epsilon = decision_threshold(formula, rule, p_used)
    found = assignment_search(formula, rule, p_used, "analytic")
    decision = Decision(
        satisfiable=found.lr >= tau,
        lr_star=found.lr,
        tau=tau,
        epsilon=epsilon,
        p_used=p_used,
        best_assignment=found.best,
        boolean_satisfiable=is_satisfiable(formula),
    )
    if check and not decision.consistent:
        raise ReductionViolation(
            f"learning-rate verdict {decision.satisfiable} (lr*={decision.lr_star}, tau={tau}) "
            f"disagrees with boolean satisfiability {decision.boolean_satisfiable}"
        )
    return decision
