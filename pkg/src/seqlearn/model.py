"""Core domain types: networks, orderings, aggregation rules and 3-CNF formulas.

Node identity is a dense integer ``0..n-1``. A :class:`Network` knows nothing
about what its nodes mean; role annotations for compiled formula graphs live
in :class:`FormulaGraph`.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

from .polynomial import Polynomial, Rational, as_rational

__all__ = [
    "Rational",
    "Polynomial",
    "as_rational",
    "Network",
    "NetworkError",
    "Ordering",
    "OrderingError",
    "Rule",
    "Literal",
    "CnfFormula",
    "FormulaError",
    "Assignment",
    "CellDummy",
    "CellLiteral",
    "GadgetLiteral",
    "GadgetDummy",
    "FormulaGraph",
    "validate_network",
    "ordering_from_list",
    "format_rational",
    "network_to_json",
    "network_from_json",
    "parse_orderings",
    "format_ordering",
]


class NetworkError(ValueError):
    pass


class OrderingError(ValueError):
    """Raised for malformed orderings; ``kind`` is one of
    ``duplicate``, ``missing``, ``out_of_range``."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class FormulaError(ValueError):
    pass


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


class Rule(enum.Enum):
    BAYESIAN = "bayesian"
    MAJORITY = "majority"

    @classmethod
    def parse(cls, name: Union[str, "Rule"]) -> "Rule":
        if isinstance(name, Rule):
            return name
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown rule {name!r}; expected 'bayesian' or 'majority'") from None


@dataclass(frozen=True)
class Network:
    """Directed graph on nodes ``0..n-1`` with prior ``q = Pr[theta = 1]``
    and common signal accuracy ``p``.

    Construction does not validate; call :func:`validate_network` for a
    diagnostic list or :meth:`check` to raise on the first problem.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    q: Fraction = Fraction(1, 2)
    p: Fraction = Fraction(3, 4)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        object.__setattr__(self, "q", as_rational(self.q))
        object.__setattr__(self, "p", as_rational(self.p))

    @cached_property
    def in_neighbors(self) -> tuple[tuple[int, ...], ...]:
        ins: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            ins[v].add(u)
        return tuple(tuple(sorted(s)) for s in ins)

    @cached_property
    def out_neighbors(self) -> tuple[tuple[int, ...], ...]:
        outs: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            outs[u].add(v)
        return tuple(tuple(sorted(s)) for s in outs)

    def with_p(self, p) -> "Network":
        return replace(self, p=as_rational(p))

    def check(self) -> "Network":
        problems = validate_network(self)
        if problems:
            raise NetworkError("; ".join(problems))
        return self

    def weak_components(self) -> list[list[int]]:
        """Weakly connected components, each sorted, ordered by smallest id."""
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for u, v in self.edges:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[max(ru, rv)] = min(ru, rv)
        groups: dict[int, list[int]] = {}
        for v in range(self.n):
            groups.setdefault(find(v), []).append(v)
        return sorted(groups.values(), key=lambda g: g[0])


def validate_network(network: Network) -> list[str]:
    """Return a list of violated invariants; an empty list means valid."""
    problems = []
    if network.n < 1:
        problems.append(f"node count must be positive, got {network.n}")
    if not (0 < network.q < 1):
        problems.append(f"prior q={network.q} outside (0, 1)")
    if not (Fraction(1, 2) <= network.p <= 1):
        problems.append(f"accuracy p={network.p} outside [1/2, 1]")
    seen = set()
    for u, v in network.edges:
        if not (0 <= u < network.n and 0 <= v < network.n):
            problems.append(f"edge ({u},{v}) references a node outside 0..{network.n - 1}")
        if u == v:
            problems.append(f"self-loop at node {u}")
        if (u, v) in seen:
            problems.append(f"duplicate edge ({u},{v})")
        seen.add((u, v))
    return problems


@dataclass(frozen=True)
class Ordering:
    """Decision ordering. ``sequence[k]`` is the node announcing at rank
    ``k + 1``."""

    sequence: tuple[int, ...]

    @cached_property
    def ranks(self) -> dict[int, int]:
        return {v: k + 1 for k, v in enumerate(self.sequence)}

    def rank(self, v: int) -> int:
        return self.ranks[v]

    def __len__(self):
        return len(self.sequence)

    def __iter__(self):
        return iter(self.sequence)


def ordering_from_list(ids: Sequence[int], n: int) -> Ordering:
    seen = set()
    for v in ids:
        if not (0 <= v < n):
            raise OrderingError("out_of_range", f"node id {v} outside 0..{n - 1}")
        if v in seen:
            raise OrderingError("duplicate", f"node id {v} appears more than once")
        seen.add(v)
    if len(seen) != n:
        missing = sorted(set(range(n)) - seen)
        raise OrderingError("missing", f"ordering misses node ids {missing}")
    return Ordering(tuple(int(v) for v in ids))


# -- formulas -----------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Literal:
    var: int
    positive: bool = True

    @classmethod
    def from_dimacs(cls, k: int) -> "Literal":
        if k == 0:
            raise FormulaError("0 is not a literal")
        return cls(abs(k), k > 0)

    def to_dimacs(self) -> int:
        return self.var if self.positive else -self.var

    def is_true(self, assignment: "Assignment") -> bool:
        return assignment.values[self.var - 1] == self.positive

    def __str__(self):
        return f"x{self.var}" if self.positive else f"~x{self.var}"


@dataclass(frozen=True)
class CnfFormula:
    """3-CNF formula: every clause has exactly three literals over three
    distinct variables."""

    num_vars: int
    clauses: tuple[tuple[Literal, Literal, Literal], ...]

    def __post_init__(self):
        clauses = tuple(tuple(c) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.num_vars < 1:
            raise FormulaError("formula needs at least one variable")
        if not clauses:
            raise FormulaError("formula needs at least one clause")
        for k, clause in enumerate(clauses):
            if len(clause) != 3:
                raise FormulaError(f"clause {k + 1} has {len(clause)} literals, expected 3")
            vars_ = [lit.var for lit in clause]
            for v in vars_:
                if not (1 <= v <= self.num_vars):
                    raise FormulaError(f"clause {k + 1}: variable {v} outside 1..{self.num_vars}")
            if len(set(vars_)) != 3:
                raise FormulaError(f"clause {k + 1} repeats a variable")

    @classmethod
    def from_ints(cls, num_vars: int, clauses: Iterable[Iterable[int]]) -> "CnfFormula":
        return cls(num_vars, tuple(tuple(Literal.from_dimacs(k) for k in c) for c in clauses))

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {self.num_clauses}"]
        lines += [" ".join(str(l.to_dimacs()) for l in c) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"

    def __str__(self):
        return " & ".join("(" + " | ".join(map(str, c)) + ")" for c in self.clauses)


@dataclass(frozen=True)
class Assignment:
    values: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(bool(v) for v in self.values))

    @classmethod
    def from_bits(cls, bits: str) -> "Assignment":
        if set(bits) - {"0", "1"}:
            raise ValueError(f"assignment must be a 0/1 string, got {bits!r}")
        return cls(tuple(b == "1" for b in bits))

    def to_bits(self) -> str:
        return "".join("1" if v else "0" for v in self.values)

    def __len__(self):
        return len(self.values)

    def check_for(self, formula: CnfFormula) -> "Assignment":
        if len(self.values) != formula.num_vars:
            raise ValueError(
                f"assignment has {len(self.values)} values, formula has {formula.num_vars} variables"
            )
        return self


# -- formula graphs -----------------------------------------------------------


@dataclass(frozen=True)
class CellDummy:
    var: int


@dataclass(frozen=True)
class CellLiteral:
    var: int
    positive: bool


@dataclass(frozen=True)
class GadgetLiteral:
    clause: int
    slot: int


@dataclass(frozen=True)
class GadgetDummy:
    clause: int
    index: int


Role = Union[CellDummy, CellLiteral, GadgetLiteral, GadgetDummy]


def _role_to_json(role: Role) -> dict:
    if isinstance(role, CellDummy):
        return {"kind": "cell_dummy", "var": role.var}
    if isinstance(role, CellLiteral):
        return {"kind": "cell_literal", "var": role.var, "positive": role.positive}
    if isinstance(role, GadgetLiteral):
        return {"kind": "gadget_literal", "clause": role.clause, "slot": role.slot}
    return {"kind": "gadget_dummy", "clause": role.clause, "index": role.index}


def _role_from_json(d: Mapping) -> Role:
    kind = d["kind"]
    if kind == "cell_dummy":
        return CellDummy(int(d["var"]))
    if kind == "cell_literal":
        return CellLiteral(int(d["var"]), bool(d["positive"]))
    if kind == "gadget_literal":
        return GadgetLiteral(int(d["clause"]), int(d["slot"]))
    if kind == "gadget_dummy":
        return GadgetDummy(int(d["clause"]), int(d["index"]))
    raise ValueError(f"unknown role kind {kind!r}")


@dataclass(frozen=True)
class FormulaGraph:
    """A compiled formula network plus per-node role annotations.

    Variables are 1-based, clauses 0-based. ``clause_slots[(c, s)]`` is the
    literal feeding slot ``s`` of clause ``c``.
    """

    network: Network
    variant: Rule
    roles: tuple[Role, ...]
    clause_slots: Mapping[tuple[int, int], Literal]
    formula: Optional[CnfFormula] = field(default=None, compare=False)

    @cached_property
    def node_of(self) -> dict[Role, int]:
        return {role: v for v, role in enumerate(self.roles)}

    @property
    def num_vars(self) -> int:
        return sum(isinstance(r, CellDummy) for r in self.roles)

    @property
    def num_clauses(self) -> int:
        return sum(isinstance(r, GadgetLiteral) for r in self.roles) // 3

    def cell(self, var: int) -> tuple[int, int, int]:
        """Node ids ``(d_x, x, ~x)`` of the cell for variable ``var``."""
        ix = self.node_of
        return ix[CellDummy(var)], ix[CellLiteral(var, True)], ix[CellLiteral(var, False)]

    def literal_node(self, lit: Literal) -> int:
        return self.node_of[CellLiteral(lit.var, lit.positive)]

    def gadget_literals(self, clause: int) -> tuple[int, int, int]:
        ix = self.node_of
        return tuple(ix[GadgetLiteral(clause, s)] for s in range(3))

    def gadget_dummies(self, clause: int) -> tuple[int, ...]:
        ix = self.node_of
        return tuple(ix[r] for r in (GadgetDummy(clause, 0), GadgetDummy(clause, 1)) if r in ix)

    def gadget_nodes(self, clause: int) -> tuple[int, ...]:
        return self.gadget_dummies(clause) + self.gadget_literals(clause)

    def with_p(self, p) -> "FormulaGraph":
        return replace(self, network=self.network.with_p(p))


# -- serialization ------------------------------------------------------------


def network_to_json(network: Network, graph: Optional[FormulaGraph] = None) -> dict:
    doc = {
        "n": network.n,
        "edges": [[u, v] for u, v in network.edges],
        "q": format_rational(network.q),
        "p": format_rational(network.p),
    }
    if graph is not None:
        doc["variant"] = graph.variant.value
        doc["roles"] = {str(v): _role_to_json(r) for v, r in enumerate(graph.roles)}
        doc["clause_slots"] = [
            {"clause": c, "slot": s, "literal": lit.to_dimacs()}
            for (c, s), lit in sorted(graph.clause_slots.items())
        ]
        if graph.formula is not None:
            doc["num_vars"] = graph.formula.num_vars
    return doc


def network_from_json(doc: Union[str, Mapping]) -> tuple[Network, Optional[FormulaGraph]]:
    """Parse the network JSON document; returns the network and, when role
    annotations are present, the formula graph they describe."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    for key in ("n", "edges", "q", "p"):
        if key not in doc:
            raise NetworkError(f"network JSON lacks field {key!r}")
    network = Network(
        n=int(doc["n"]),
        edges=tuple((int(u), int(v)) for u, v in doc["edges"]),
        q=as_rational(doc["q"]),
        p=as_rational(doc["p"]),
    )
    graph = None
    if doc.get("roles"):
        roles = tuple(_role_from_json(doc["roles"][str(v)]) for v in range(network.n))
        slots = {
            (int(e["clause"]), int(e["slot"])): Literal.from_dimacs(int(e["literal"]))
            for e in doc.get("clause_slots", [])
        }
        formula = None
        if slots:
            m = 1 + max(c for c, _ in slots)
            clauses = tuple(tuple(slots[(c, s)] for s in range(3)) for c in range(m))
            num_vars = int(doc.get("num_vars", sum(isinstance(r, CellDummy) for r in roles)))
            formula = CnfFormula(num_vars, clauses)
        graph = FormulaGraph(network, Rule.parse(doc.get("variant", "bayesian")), roles, slots, formula)
    return network, graph


def parse_orderings(text: str, n: int) -> list[Ordering]:
    """Ordering file: whitespace-separated node ids, one permutation per line."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(ordering_from_list([int(tok) for tok in line.split()], n))
    return out


def format_ordering(ordering: Ordering) -> str:
    return " ".join(str(v) for v in ordering.sequence)
