"""Closed-form learning rates of cells and clause gadgets, thresholds, and
the approximation-gap calculator.

Every formula is kept as a :class:`Polynomial` in the signal accuracy ``p``.
Formulas written in terms of the "on" literal accuracy
``p' = p/2 + 3p^2/2 - p^3`` are built by substituting that polynomial, so
each has a single canonical pure-``p`` form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .model import Assignment, CnfFormula, Rule, as_rational
from .polynomial import Polynomial

__all__ = [
    "P",
    "P_PRIME",
    "MAJ_ON",
    "ClauseState",
    "p_prime",
    "bayes_cell_clr",
    "majority_cell_clr",
    "cell_clr",
    "cell_poly",
    "bayes_clause_poly",
    "majority_clause_poly",
    "clause_poly",
    "bayes_clause_clr",
    "majority_clause_clr",
    "clause_clr",
    "bayes_literal_node_poly",
    "bayes_literal_node_lr",
    "majority_general_terms",
    "majority_general_clause_clr",
    "bayes_gadget_terms",
    "bayes_general_clause_clr",
    "gadget_state_poly",
    "placement_polys",
    "FORMS",
    "BAYES_PLACEMENT_POLYS",
    "MAJORITY_PLACEMENT_POLYS",
    "gadget_size",
    "node_count",
    "threshold_p",
    "decision_threshold",
    "analytic_network_clr",
    "analytic_network_lr",
    "apx_epsilon",
    "apx_epsilon_poly",
    "apx_alpha",
    "apx_min_p",
]

P = Polynomial.x()
ONE = Polynomial.const(1)
HALF = Fraction(1, 2)

#: success probability of the later literal node of a Bayesian cell
P_PRIME = P * HALF + P**2 * Fraction(3, 2) - P**3
#: same for a majority cell: at least two of three independent inputs right
MAJ_ON = 3 * P**2 - 2 * P**3


def _check_p(p) -> Fraction:
    p = as_rational(p)
    if not (HALF <= p <= 1):
        raise ValueError(f"p={p} outside [1/2, 1]")
    return p


@dataclass(frozen=True)
class ClauseState:
    """On/off flags of the literals feeding a clause gadget, in the order
    their gadget nodes announce."""

    flags: tuple[bool, bool, bool]

    def __post_init__(self):
        flags = tuple(bool(f) for f in self.flags)
        if len(flags) != 3:
            raise ValueError("a clause state has exactly three flags")
        object.__setattr__(self, "flags", flags)

    @classmethod
    def parse(cls, text: str) -> "ClauseState":
        """Accept ``"101"`` or ``"on,off,on"``."""
        parts = text.split(",") if "," in text else list(text)
        table = {"1": True, "on": True, "0": False, "off": False}
        return cls(tuple(table[p.strip().lower()] for p in parts))

    @property
    def on_count(self) -> int:
        return sum(self.flags)

    def label(self) -> str:
        return ",".join("on" if f else "off" for f in self.flags)

    @classmethod
    def all_states(cls):
        from itertools import product

        return [cls(f) for f in product((False, True), repeat=3)]


# -- cells --------------------------------------------------------------------

BAYES_CELL = P * Fraction(5, 2) + P**2 * Fraction(3, 2) - P**3
MAJORITY_CELL = 2 * P + 3 * P**2 - 2 * P**3


def p_prime(p) -> Fraction:
    return P_PRIME(_check_p(p))


def bayes_cell_clr(p) -> Fraction:
    return BAYES_CELL(_check_p(p))


def majority_cell_clr(p) -> Fraction:
    return MAJORITY_CELL(_check_p(p))


def cell_poly(rule: Rule) -> Polynomial:
    return BAYES_CELL if Rule.parse(rule) is Rule.BAYESIAN else MAJORITY_CELL


def cell_clr(rule: Rule, p) -> Fraction:
    return cell_poly(rule)(_check_p(p))


# -- Bayesian gadget ----------------------------------------------------------

_q = P_PRIME

_BAYES_CLAUSE = (
    P * (2 * P**4 - 5 * P**3 + 5 * P + 1),
    P**4 * (2 * _q - 1) + P**3 * (2 - 4 * _q) + P**2 * (1 - 2 * _q) + 4 * P * _q + _q,
    4 * P**3 * (_q - 1) * _q + P**2 * (-6 * _q**2 + 4 * _q + 1) + 2 * P * _q + _q * (_q + 1),
    _q * (P**2 * (2 * _q**2 - 3 * _q + 1) - P * (2 * _q**2 + _q - 3) + 2 * _q + 1),
)

_BAYES_SECOND = {
    (False, False): 3 * P**2 - 2 * P**3,
    (True, True): _q * (_q + 2 * P - 2 * P * _q),
    (True, False): P * (P + 2 * _q - 2 * P * _q),
    (False, True): P * (P + 2 * _q - 2 * P * _q),
}

_BAYES_THIRD = {
    (False, False, False): P**2 * (2 * P**3 - 5 * P**2 + 2 * P + 2),
    (False, False, True): P * (-(P**2) - P * (_q - 2) + _q),
    (False, True, False): P * (P**3 * (2 * _q - 1) + P**2 * (1 - 4 * _q) + P * (_q + 1) + _q),
    (False, True, True): P * (2 * P**2 * (_q - 1) * _q + P * (-3 * _q**2 + _q + 1) + _q * (_q + 1)),
    (True, False, False): P**4 * (2 * _q - 1) + P**3 * (2 - 4 * _q) + 2 * P * _q,
    (True, False, True): P * (P**2 * (2 * _q**2 - 2 * _q + 1) - 3 * P * _q**2 + _q * (_q + 2)),
    (True, True, False): P * (4 * P**2 * (_q - 1) * _q + P * (-6 * _q**2 + 4 * _q + 1) + 2 * _q**2),
    (True, True, True): _q * (P**2 * (2 * _q**2 - 3 * _q + 1) + P * (-2 * _q**2 + _q + 1) + _q),
}

#: gadget CLR for each announcing order of a one-on / one-off clause, keyed
#: by the position (0, 1, 2) of the distinguished literal's node
BAYES_PLACEMENT_POLYS = {
    1: {
        0: _BAYES_CLAUSE[1],
        1: P * (P**3 * (2 * _q - 1) + P**2 * (1 - 4 * _q) - P * (_q - 2) + 3 * _q + 1),
        2: P * (-3 * P**2 - P * (_q - 5) + _q + 1),
    },
    2: {
        0: P * (2 * P**2 * (_q - 1) * _q - P * (3 * _q**2 + _q - 2) + _q**2 + 3 * _q + 1),
        1: _q + P * _q * (4 + _q) + P**2 * (1 - 2 * _q - 3 * _q**2) + P**3 * (1 - 2 * _q + 2 * _q**2),
        2: _BAYES_CLAUSE[2],
    },
}


# -- majority gadget ----------------------------------------------------------

_MAJ_CLAUSE = (
    P * Polynomial((2, 3, 2, 25, -42, 23, -67, 102, -31, -24, 12)),
    P * Polynomial((2, 2, 6, 11, 4, -51, -6, 21, 115, -136, 13, 36, -12)),
    P * Polynomial((2, 2, 12, 9, -40, -14, 76, -54, 12)),
    P * Polynomial((2, 2, 3, 14, 22, -66, -69, 310, -688, 710, 756, -2581, 2304, -558, -372, 264, -48)),
)

MAJORITY_PLACEMENT_POLYS = {
    1: {
        0: _MAJ_CLAUSE[1],
        1: -P * Polynomial((-2, -3, 1, -28, 6, 85, -95, 132, -248, 165, 42, -84, 24)),
        2: P * Polynomial((2, 3, 2, 21, -25, -29, 143, -440, 684, -458, 54, 72, -24)),
    },
    # keyed by the position of the off literal
    2: {
        0: P * Polynomial((2, 3, 8, 11, -36, 28, -116, 279, -282, 132, -24)),
        1: Polynomial((2, 2, 15, -7, -11, -21, 18, 57, -86, 44, -8)),
        2: _MAJ_CLAUSE[2],
    },
}


def majority_general_terms(pa, pb, pc, p, *, printed_first: bool = False):
    """Success probabilities of the three majority gadget literal nodes, in
    announcing order, fed by cell nodes of accuracies ``pa, pb, pc``.

    Arguments may be rationals or polynomials in ``p``. The first node's
    term is ``p((1-p)pa + p(2-p))``; ``printed_first=True`` substitutes the
    misprinted ``p((1-p)pa + p(p+2))`` instead, which exceeds 1 at ``p=1``.
    """
    r = 1 - p
    if printed_first:
        prob_a = p * (r * pa + p * (p + 2))
    else:
        prob_a = p * (r * pa + p * (2 - p))
    prob_b = p**2 * (r**2 * (pa + 5 * pb) + p * (4 - 3 * p))
    prob_c = p**2 * (
        r**2 * (pa * (1 - pc * (pb + p - 1) + pb * p) + 2 * pb * p - pc * (pb * (5 * p - 3) - 3 * p - 2))
        + p * (4 - 3 * p)
    )
    return prob_a, prob_b, prob_c


def majority_general_clause_clr(pa, pb, pc, p, *, printed_first: bool = False) -> Fraction:
    pa, pb, pc, p = (_check_p(v) for v in (pa, pb, pc, p))
    return 2 * p + sum(majority_general_terms(pa, pb, pc, p, printed_first=printed_first))


def _majority_exact_poly(flags: Sequence[bool]) -> Polynomial:
    feeds = [MAJ_ON if f else P for f in flags]
    return 2 * P + sum(majority_general_terms(*feeds, P), Polynomial())


# -- gadget case analysis -------------------------------------------------------


def _decide(weight1, weight0, witness: Fraction) -> Fraction:
    """Bayesian action probability from posterior weights that may be
    polynomials in p; a non-identical pair is compared at ``witness``."""
    if isinstance(weight1, Polynomial) or isinstance(weight0, Polynomial):
        w1, w0 = Polynomial._lift(weight1), Polynomial._lift(weight0)
        if w1 == w0:
            return HALF
        a, b = w1(witness), w0(witness)
        if a == b:
            raise ValueError(f"witness p={witness} sits on a decision boundary")
    else:
        a, b = weight1, weight0
    return Fraction(1) if a > b else Fraction(0) if a < b else HALF


def _sig(acc, bit: int, theta: int):
    return acc if bit == theta else 1 - acc


def bayes_gadget_terms(pa, pb, pc, p, *, witness: Fraction = Fraction(3, 4)):
    """Success probabilities of the three Bayesian gadget literal nodes in
    announcing order, by explicit case analysis over each node's inputs.

    The first node sees its signal and the cell node ``alpha``; the second
    additionally sees the first; the third sees all of them plus ``gamma``.
    Cell nodes are independent of each other and of the gadget signals, so
    each likelihood factorises as in the hand derivation. Arguments may be
    rationals or polynomials in ``p`` (decided at ``witness``).
    """
    bits = (0, 1)
    # first node: Pr[a = 1 | theta]
    da = {(s, x): _decide(_sig(p, s, 1) * _sig(pa, x, 1), _sig(p, s, 0) * _sig(pa, x, 0), witness)
          for s in bits for x in bits}
    a1 = {t: sum(_sig(p, s, t) * _sig(pa, x, t) * da[s, x] for s in bits for x in bits) for t in bits}

    def pr_a(x, t):
        return a1[t] if x else 1 - a1[t]

    # second node: inputs (s_b, a, beta), mutually independent given theta
    db = {
        (s, x, y): _decide(
            _sig(p, s, 1) * pr_a(x, 1) * _sig(pb, y, 1), _sig(p, s, 0) * pr_a(x, 0) * _sig(pb, y, 0), witness
        )
        for s in bits for x in bits for y in bits
    }
    # Pr[b = 1 | a = x, theta = t]
    b1 = {(x, t): sum(_sig(p, s, t) * _sig(pb, y, t) * db[s, x, y] for s in bits for y in bits)
          for x in bits for t in bits}

    def pr_b(y, x, t):
        return b1[x, t] if y else 1 - b1[x, t]

    # third node: inputs (s_c, gamma, a, b); b depends on a
    def weight(s, g, x, y, t):
        return _sig(p, s, t) * _sig(pc, g, t) * pr_a(x, t) * pr_b(y, x, t)

    succ_c = 0
    for s in bits:
        for g in bits:
            for x in bits:
                for y in bits:
                    d = _decide(weight(s, g, x, y, 1), weight(s, g, x, y, 0), witness)
                    succ_c = succ_c + weight(s, g, x, y, 1) * d
    succ_b = sum(pr_a(x, 1) * b1[x, 1] for x in bits)
    return a1[1], succ_b, succ_c


def _bayes_exact_terms(flags: Sequence[bool]) -> tuple[Polynomial, Polynomial, Polynomial]:
    feeds = [P_PRIME if f else P for f in flags]
    return tuple(Polynomial._lift(t) for t in bayes_gadget_terms(*feeds, P))


def bayes_general_clause_clr(pa, pb, pc, p) -> Fraction:
    pa, pb, pc, p = (_check_p(v) for v in (pa, pb, pc, p))
    return sum(bayes_gadget_terms(pa, pb, pc, p))


# -- forms --------------------------------------------------------------------

FORMS = ("paper", "exact")


def _check_forms(forms: str) -> str:
    if forms not in FORMS:
        raise ValueError(f"unknown forms {forms!r}; expected one of {FORMS}")
    return forms


def _placement_flags(i: int) -> tuple[bool, bool, bool]:
    # canonical placement: lone on-literal first, lone off-literal last
    return ((False,) * 3, (True, False, False), (True, True, False), (True,) * 3)[i]


_EXACT_CACHE: dict = {}


def _exact_clause(rule: Rule, i: int) -> Polynomial:
    key = (rule, i)
    if key not in _EXACT_CACHE:
        flags = _placement_flags(i)
        if rule is Rule.BAYESIAN:
            _EXACT_CACHE[key] = sum(_bayes_exact_terms(flags), Polynomial())
        else:
            _EXACT_CACHE[key] = _majority_exact_poly(flags)
    return _EXACT_CACHE[key]


def gadget_state_poly(rule: Rule, flags: Sequence[bool]) -> Polynomial:
    """Exact gadget CLR for literal nodes announcing in the given order with
    the given feeding on/off flags."""
    rule = Rule.parse(rule)
    flags = tuple(bool(f) for f in flags)
    if rule is Rule.BAYESIAN:
        return sum(_bayes_exact_terms(flags), Polynomial())
    return _majority_exact_poly(flags)


def bayes_clause_poly(i: int, forms: str = "paper") -> Polynomial:
    if i not in range(4):
        raise ValueError(f"on-literal count {i} outside 0..3")
    if _check_forms(forms) == "paper":
        return _BAYES_CLAUSE[i]
    return _exact_clause(Rule.BAYESIAN, i)


def bayes_clause_clr(i: int, p, forms: str = "paper") -> Fraction:
    return bayes_clause_poly(i, forms)(_check_p(p))


def majority_clause_poly(i: int, forms: str = "paper") -> Polynomial:
    if i not in range(4):
        raise ValueError(f"on-literal count {i} outside 0..3")
    if _check_forms(forms) == "paper":
        return _MAJ_CLAUSE[i]
    return _exact_clause(Rule.MAJORITY, i)


def majority_clause_clr(i: int, p, forms: str = "paper") -> Fraction:
    return majority_clause_poly(i, forms)(_check_p(p))


def bayes_literal_node_poly(position: int, state: ClauseState, forms: str = "paper") -> Polynomial:
    """Success polynomial of the gadget literal node announcing at
    ``position`` (0, 1, 2), given the states of the literals feeding the
    nodes at positions 0..2."""
    if position not in (0, 1, 2):
        raise ValueError(f"gadget position {position!r} outside 0..2")
    f = state.flags
    if _check_forms(forms) == "exact":
        return _bayes_exact_terms(f)[position]
    if position == 0:
        return _q if f[0] else P
    if position == 1:
        return _BAYES_SECOND[f[:2]]
    return _BAYES_THIRD[f]


_POSITION_NAMES = {"first": 0, "second": 1, "third": 2}


def bayes_literal_node_lr(position, state: ClauseState, p, forms: str = "paper") -> Fraction:
    if isinstance(position, str):
        if position not in _POSITION_NAMES:
            raise ValueError(f"unknown position {position!r}")
        position = _POSITION_NAMES[position]
    return bayes_literal_node_poly(position, state, forms)(_check_p(p))


# -- rule dispatch ------------------------------------------------------------


def clause_poly(rule: Rule, i: int, forms: str = "paper") -> Polynomial:
    if Rule.parse(rule) is Rule.BAYESIAN:
        return bayes_clause_poly(i, forms)
    return majority_clause_poly(i, forms)


def clause_clr(rule: Rule, i: int, p, forms: str = "paper") -> Fraction:
    return clause_poly(rule, i, forms)(_check_p(p))


def placement_polys(rule: Rule, i: int, forms: str = "paper") -> dict[int, Polynomial]:
    """Gadget CLR of a one-on (``i=1``) or one-off (``i=2``) clause keyed by
    the announcing position of the distinguished literal."""
    if i not in (1, 2):
        raise ValueError("placements differ only for one or two on-literals")
    rule = Rule.parse(rule)
    if _check_forms(forms) == "paper":
        return dict((BAYES_PLACEMENT_POLYS if rule is Rule.BAYESIAN else MAJORITY_PLACEMENT_POLYS)[i])
    out = {}
    for pos in range(3):
        flags = [i == 2] * 3
        flags[pos] = i == 1
        out[pos] = gadget_state_poly(rule, flags)
    return out


def gadget_size(rule: Rule) -> int:
    return 3 if Rule.parse(rule) is Rule.BAYESIAN else 5


def node_count(rule: Rule, num_vars: int, num_clauses: int) -> int:
    return 3 * num_vars + gadget_size(rule) * num_clauses


# -- thresholds ---------------------------------------------------------------


def threshold_p(rule: Rule, M: int) -> Fraction:
    """Smallest accuracy at which the assignment-induced ordering is
    guaranteed optimal for ``M`` clauses."""
    if M < 2:
        raise ValueError(f"threshold accuracy is undefined for M={M} < 2 clauses")
    if Rule.parse(rule) is Rule.BAYESIAN:
        return Fraction(3 * M - 4, 3 * M - 3)
    return Fraction(6 * M - 7, 6 * M - 6)


def decision_threshold(formula: CnfFormula, rule: Rule, p=None, forms: str = "exact") -> tuple[Fraction, Fraction]:
    """Midpoint ``tau`` between the worst satisfiable and the best
    unsatisfiable network learning rate, and ``epsilon = 1 - tau``.

    ``p`` defaults to the threshold accuracy; values below it are refused
    because the two bounds are no longer guaranteed to separate. The clause
    rates come from ``forms`` ("exact" by default, see :func:`clause_poly`).
    """
    rule = Rule.parse(rule)
    N, M = formula.num_vars, formula.num_clauses
    floor = threshold_p(rule, M)
    p = floor if p is None else _check_p(p)
    if p < floor:
        raise ValueError(f"p={p} below the separation threshold {floor} for M={M}")
    L = [clause_poly(rule, i, forms)(p) for i in range(4)]
    cell = cell_poly(rule)(p)
    tau = HALF * (2 * N * cell + M * L[1] + (M - 1) * L[3] + L[0]) / node_count(rule, N, M)
    return tau, 1 - tau


def analytic_network_clr(
    formula: CnfFormula, assignment: Assignment, rule: Rule, p, forms: str = "exact"
) -> Fraction:
    from .reduction import on_count

    rule = Rule.parse(rule)
    p = _check_p(p)
    assignment.check_for(formula)
    L = [clause_poly(rule, i, forms)(p) for i in range(4)]
    total = formula.num_vars * cell_poly(rule)(p)
    for clause in formula.clauses:
        total += L[on_count(clause, assignment)]
    return total


def analytic_network_lr(
    formula: CnfFormula, assignment: Assignment, rule: Rule, p, forms: str = "exact"
) -> Fraction:
    clr = analytic_network_clr(formula, assignment, rule, p, forms)
    return clr / node_count(rule, formula.num_vars, formula.num_clauses)


# -- approximation gap --------------------------------------------------------


def apx_epsilon_poly(delta, forms: str = "paper") -> Polynomial:
    delta = as_rational(delta)
    L0, L1, L3 = (bayes_clause_poly(i, forms) for i in (0, 1, 3))
    return Fraction(7, 48) * ((L1 - L0) - delta * (L3 - L0))


def apx_epsilon(delta, p, forms: str = "paper") -> Fraction:
    """Additive gap below which approximating the optimal Bayesian learning
    rate would approximate Max-E3SAT within factor ``delta``."""
    delta, p = as_rational(delta), as_rational(p)
    if not (0 < delta < 1):
        raise ValueError(f"delta={delta} outside (0, 1)")
    if not (HALF <= p <= 1):
        raise ValueError(f"p={p} outside [1/2, 1]")
    return apx_epsilon_poly(delta, forms)(p)


def apx_alpha(p, forms: str = "paper") -> Fraction:
    return 1 - apx_epsilon(Fraction(7, 8), p, forms)


def apx_min_p(delta, tol: Fraction = Fraction(1, 10**9)) -> Fraction:
    """Rational ``r`` with ``sqrt(delta) <= r <= sqrt(delta) + tol``."""
    delta = as_rational(delta)
    if not (0 < delta < 1):
        raise ValueError(f"delta={delta} outside (0, 1)")
    scale = math.ceil(1 / as_rational(tol))
    # smallest k with (k / scale)^2 >= delta
    target_num = delta.numerator * scale * scale
    k = math.isqrt(target_num // delta.denominator)
    while k * k * delta.denominator < target_num:
        k += 1
    return Fraction(k, scale)
