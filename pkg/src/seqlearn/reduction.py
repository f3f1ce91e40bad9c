"""3-CNF front end and formula-graph compiler.

Node-id layout of a compiled graph: three ids per variable ``(d_x, x, ~x)``
in variable order, then (majority variant only) two dummies per clause,
then three literal slots per clause.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .model import (
    Assignment,
    CellDummy,
    CellLiteral,
    CnfFormula,
    FormulaError,
    FormulaGraph,
    GadgetDummy,
    GadgetLiteral,
    Literal,
    Network,
    Ordering,
    Rule,
)

__all__ = [
    "DimacsError",
    "parse_dimacs",
    "build_formula_graph",
    "induced_partial_order",
    "assignment_from_ordering",
    "canonical_ordering",
    "gadget_placement",
    "count_satisfied",
    "is_satisfiable",
    "on_count",
]


class DimacsError(FormulaError):
    def __init__(self, kind: str, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.kind = kind
        self.line = line


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF restricted to exact 3-literal clauses over distinct
    variables. Clauses may span lines; each is terminated by ``0``."""
    header = None
    clauses: list[tuple[Literal, ...]] = []
    current: list[int] = []
    start_line = 0
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        last_line = lineno
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            fields = line.split()
            if header is not None:
                raise DimacsError("header", lineno, "second problem line")
            if len(fields) != 4 or fields[1] != "cnf":
                raise DimacsError("header", lineno, f"malformed header {line!r}")
            try:
                header = (int(fields[2]), int(fields[3]))
            except ValueError:
                raise DimacsError("header", lineno, f"malformed header {line!r}") from None
            if header[0] < 1 or header[1] < 1:
                raise DimacsError("header", lineno, "variable and clause counts must be positive")
            continue
        if header is None:
            raise DimacsError("header", lineno, "clause data before the 'p cnf' header")
        for tok in line.split():
            try:
                k = int(tok)
            except ValueError:
                raise DimacsError("token", lineno, f"non-integer token {tok!r}") from None
            if not current:
                start_line = lineno
            if k != 0:
                if abs(k) > header[0]:
                    raise DimacsError("range", lineno, f"literal {k} outside 1..{header[0]}")
                current.append(k)
                continue
            clauses.append(_check_clause(current, start_line))
            current = []
    if header is None:
        raise DimacsError("header", last_line, "missing 'p cnf' header")
    if current:
        raise DimacsError("unterminated", start_line, "last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise DimacsError("count", last_line, f"header declares {header[1]} clauses, found {len(clauses)}")
    return CnfFormula(header[0], tuple(clauses))


def _check_clause(lits: list[int], line: int) -> tuple[Literal, ...]:
    vars_ = [abs(k) for k in lits]
    for i, k in enumerate(lits):
        if -k in lits[:i]:
            raise DimacsError("complementary", line, f"clause contains both {-k} and {k}")
    if len(set(vars_)) != len(vars_):
        raise DimacsError("duplicate", line, "clause repeats a literal")
    if len(lits) != 3:
        raise DimacsError("arity", line, f"clause has {len(lits)} literals, expected 3")
    return tuple(Literal.from_dimacs(k) for k in lits)


def build_formula_graph(formula: CnfFormula, rule: Rule, p: Optional[Fraction] = None) -> FormulaGraph:
    """Compile ``formula`` into the cell/gadget network for ``rule``.

    ``p`` defaults to the separation threshold for the formula's clause
    count (1/2 + 1/4 when a single clause leaves it undefined)."""
    from .gadgets import threshold_p

    rule = Rule.parse(rule)
    N, M = formula.num_vars, formula.num_clauses
    roles = []
    edges: list[tuple[int, int]] = []
    for x in range(1, N + 1):
        d = len(roles)
        roles += [CellDummy(x), CellLiteral(x, True), CellLiteral(x, False)]
        edges += [(d, d + 1), (d, d + 2), (d + 1, d + 2), (d + 2, d + 1)]
    if rule is Rule.MAJORITY:
        for c in range(M):
            roles += [GadgetDummy(c, 0), GadgetDummy(c, 1)]
    slot_base = len(roles)
    for c in range(M):
        roles += [GadgetLiteral(c, s) for s in range(3)]

    slots = {}
    for c, clause in enumerate(formula.clauses):
        g = [slot_base + 3 * c + s for s in range(3)]
        for s, lit in enumerate(clause):
            slots[(c, s)] = lit
            cell_node = 3 * (lit.var - 1) + (1 if lit.positive else 2)
            edges.append((cell_node, g[s]))
        if rule is Rule.MAJORITY:
            dummies = (3 * N + 2 * c, 3 * N + 2 * c + 1)
            edges += [(d, t) for d in dummies for t in g]
        edges += [(a, b) for a in g for b in g if a != b]

    if p is None:
        p = threshold_p(rule, M) if M >= 2 else Fraction(3, 4)
    network = Network(len(roles), tuple(edges), Fraction(1, 2), p)
    return FormulaGraph(network, rule, tuple(roles), slots, formula)


def induced_partial_order(assignment: Assignment) -> tuple[bool, ...]:
    """Per-variable cell state: ``True`` (on, ``~x`` announces before ``x``)
    exactly when the variable is true."""
    return tuple(assignment.values)


def assignment_from_ordering(graph: FormulaGraph, ordering: Ordering) -> Assignment:
    values = []
    for x in range(1, graph.num_vars + 1):
        _, pos, neg = graph.cell(x)
        values.append(ordering.rank(neg) < ordering.rank(pos))
    return Assignment(tuple(values))


def on_count(clause, assignment: Assignment) -> int:
    return sum(lit.is_true(assignment) for lit in clause)


def gadget_placement(on_flags: tuple[bool, bool, bool]) -> tuple[int, int, int]:
    """Slot order for a gadget's literal nodes: a lone on-literal goes first,
    a lone off-literal goes last, otherwise slot order."""
    on = [s for s in range(3) if on_flags[s]]
    off = [s for s in range(3) if not on_flags[s]]
    if len(on) == 1:
        return (on[0], off[0], off[1])
    if len(on) == 2:
        return (on[0], on[1], off[0])
    return (0, 1, 2)


def canonical_ordering(graph: FormulaGraph, assignment: Assignment) -> Ordering:
    N, M = graph.num_vars, graph.num_clauses
    if len(assignment) != N:
        raise ValueError(f"assignment has {len(assignment)} values, graph has {N} variables")
    seq = [graph.cell(x)[0] for x in range(1, N + 1)]
    for x in range(1, N + 1):
        _, pos, neg = graph.cell(x)
        seq += [neg, pos] if assignment.values[x - 1] else [pos, neg]
    for c in range(M):
        seq += list(graph.gadget_dummies(c))
    for c in range(M):
        flags = tuple(graph.clause_slots[(c, s)].is_true(assignment) for s in range(3))
        nodes = graph.gadget_literals(c)
        seq += [nodes[s] for s in gadget_placement(flags)]
    return Ordering(tuple(seq))


def count_satisfied(formula: CnfFormula, assignment: Assignment) -> int:
    return sum(1 for clause in formula.clauses if on_count(clause, assignment) > 0)


def is_satisfiable(formula: CnfFormula) -> bool:
    """Brute-force satisfiability over all 2^N assignments."""
    from itertools import product

    return any(
        count_satisfied(formula, Assignment(bits)) == formula.num_clauses
        for bits in product((False, True), repeat=formula.num_vars)
    )
