"""Command-line interface: compile, lr, decide, verify-lemmas, sweep."""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from . import gadgets as G
from .inference import StateExplosion, joint_forward, mc_estimate
from .model import (
    Assignment,
    CnfFormula,
    FormulaError,
    Network,
    NetworkError,
    Ordering,
    OrderingError,
    Rule,
    as_rational,
    format_rational,
    network_from_json,
    network_to_json,
    parse_orderings,
)
from .polynomial import Polynomial
from .reduction import DimacsError, build_formula_graph, canonical_ordering, parse_dimacs
from .search import ReductionViolation, decide_network_learning, gadget_placement_search

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_CAP = 3


class InputError(Exception):
    """Bad user input; reported on stderr with exit code 2."""


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _rational(text: str) -> Fraction:
    try:
        return as_rational(text)
    except (TypeError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an exact rational: {text!r}") from None


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _load_formula(path: str) -> CnfFormula:
    try:
        return parse_dimacs(_read(path))
    except DimacsError as exc:
        raise InputError(f"{path}: {exc}") from None
    except FormulaError as exc:
        raise InputError(f"{path}: {exc}") from None


# -- compile ------------------------------------------------------------------


def cmd_compile(args) -> int:
    formula = _load_formula(args.input)
    rule = Rule.parse(args.rule)
    graph = build_formula_graph(formula, rule, args.p)
    net = graph.network
    _write_text(args.output, json.dumps(network_to_json(net, graph), indent=1) + "\n")
    print(f"rule: {rule.value}")
    print(f"nodes: {net.n}")
    print(f"edges: {len(net.edges)}")
    print(f"p_used: {format_rational(net.p)}")
    try:
        tau, eps = G.decision_threshold(formula, rule, net.p)
        print(f"tau: {format_rational(tau)} ({float(tau):.12g})")
        print(f"epsilon: {format_rational(eps)} ({float(eps):.12g})")
    except ValueError as exc:
        print(f"tau: undefined ({exc})")
    return EXIT_OK


# -- lr -----------------------------------------------------------------------


def cmd_lr(args) -> int:
    try:
        network, graph = network_from_json(_read(args.graph))
    except (NetworkError, FormulaError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{args.graph}: invalid network document: {exc}") from None
    if args.p is not None:
        network = network.with_p(args.p)
        if graph is not None:
            graph = graph.with_p(args.p)
    if args.rule is not None:
        rule = Rule.parse(args.rule)
    elif graph is not None:
        rule = graph.variant
    else:
        raise InputError("--rule is required for graphs without role annotations")

    if args.assignment is not None:
        if graph is None or graph.formula is None:
            raise InputError("--assignment needs a compiled formula graph")
        try:
            assignment = Assignment.from_bits(args.assignment).check_for(graph.formula)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        orderings = [canonical_ordering(graph, assignment)]
    else:
        try:
            orderings = parse_orderings(_read(args.ordering), network.n)
        except (OrderingError, ValueError) as exc:
            raise InputError(f"{args.ordering}: {exc}") from None
        if not orderings:
            raise InputError(f"{args.ordering}: no ordering found")

    reports = []
    for ordering in orderings:
        report, table = joint_forward(network, ordering, rule, cap=args.cap)
        doc = report.to_json()
        doc["rule"] = rule.value
        doc["p"] = format_rational(network.p)
        doc["ordering"] = list(ordering.sequence)
        if args.mode == "mc":
            est, err = mc_estimate(network, ordering, rule, args.samples, args.seed, table=table)
            doc["mc"] = {"samples": args.samples, "seed": args.seed, "estimate": est, "stderr": err}
        reports.append(doc)
    out = reports[0] if len(reports) == 1 else reports
    print(json.dumps(out, indent=1))
    return EXIT_OK


# -- decide -------------------------------------------------------------------


def cmd_decide(args) -> int:
    formula = _load_formula(args.input)
    rule = Rule.parse(args.rule)
    if formula.num_clauses < 2:
        raise InputError(f"threshold accuracy undefined for M={formula.num_clauses} < 2 clauses")
    try:
        d = decide_network_learning(formula, rule)
    except ReductionViolation as exc:
        print(f"error: reduction violation: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(
        json.dumps(
            {
                "satisfiable": d.satisfiable,
                "lr_star": format_rational(d.lr_star),
                "tau": format_rational(d.tau),
                "epsilon": format_rational(d.epsilon),
                "p_used": format_rational(d.p_used),
                "best_assignment": d.best_assignment.to_bits(),
                "margin": format_rational(d.margin),
                "lr_star_decimal": float(d.lr_star),
                "tau_decimal": float(d.tau),
            },
            indent=1,
        )
    )
    return EXIT_OK if d.satisfiable else EXIT_NEGATIVE


# -- verify-lemmas ------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}" + (f": {self.detail}" if self.detail else "")


def grid(k: int, lo: Fraction = Fraction(1, 2), hi: Fraction = Fraction(1)) -> list[Fraction]:
    """``k`` equally spaced rationals strictly inside ``(lo, hi)``."""
    return [lo + (hi - lo) * Fraction(i, k + 1) for i in range(1, k + 1)]


_ONE_CLAUSE = CnfFormula.from_ints(3, [[1, 2, 3]])
_CELL_EDGES = ((0, 1), (0, 2), (1, 2), (2, 1))


def engine_cell_clr(rule: Rule, p: Fraction, on: bool = False) -> Fraction:
    net = Network(3, _CELL_EDGES, Fraction(1, 2), p)
    order = Ordering((0, 2, 1) if on else (0, 1, 2))
    return joint_forward(net, order, rule)[0].clr


def engine_gadget(rule: Rule, flags: Sequence[bool], p: Fraction, slots: Optional[Sequence[int]] = None):
    """Engine report for the gadget of ``x1 v x2 v x3`` with the cells set
    to ``flags``; gadget literal nodes announce in ``slots`` order (canonical
    placement when omitted). Returns the gadget CLR and the per-position
    successes of its literal nodes."""
    graph = build_formula_graph(_ONE_CLAUSE, rule, p)
    order = canonical_ordering(graph, Assignment(tuple(flags)))
    if slots is not None:
        lits = graph.gadget_literals(0)
        order = Ordering(tuple(v for v in order.sequence if v not in lits) + tuple(lits[s] for s in slots))
    report = joint_forward(graph.network, order, rule)[0]
    tail = order.sequence[-3:]
    return report.subset_clr(graph.gadget_nodes(0)), [report.success[v] for v in tail]


def _identity(name: str, points: Sequence[Fraction], lhs: Callable, rhs: Polynomial, degree_bound: int) -> Check:
    need = max(rhs.degree, degree_bound) + 1
    if len(points) < need:
        return Check(name, False, f"insufficient points ({len(points)} < {need})")
    for p in points:
        got = lhs(p)
        if got != rhs(p):
            return Check(name, False, f"first counterexample p={p}: engine {got}, closed form {rhs(p)}")
    return Check(name, True, f"{len(points)} points")


def _first_failure(name: str, points, pred, detail: str = "") -> Check:
    for p in points:
        if not pred(p):
            return Check(name, False, f"first counterexample p={p}")
    return Check(name, True, detail or f"{len(points)} points")


def verify_lemmas(rule: Rule, points: int, forms: str = "paper", seed: int = 0) -> list[Check]:
    rule = Rule.parse(rule)
    pts = grid(points)
    checks: list[Check] = []
    tag = rule.value
    # the engine's gadget rate is a polynomial whose degree is at most the
    # number of signals that can reach the gadget
    engine_bound = 3 * 3 + G.gadget_size(rule)

    checks.append(_identity(f"{tag}/cell-identity", pts, lambda p: engine_cell_clr(rule, p), G.cell_poly(rule), 3))
    checks.append(
        _first_failure(
            f"{tag}/cell-state-invariance", pts, lambda p: engine_cell_clr(rule, p, True) == engine_cell_clr(rule, p)
        )
    )
    for i in range(4):
        flags = (True,) * i + (False,) * (3 - i)
        checks.append(
            _identity(
                f"{tag}/L{i}-identity[{forms}]",
                pts,
                lambda p, f=flags: engine_gadget(rule, f, p)[0],
                G.clause_poly(rule, i, forms),
                engine_bound,
            )
        )
    for i in (1, 2):
        for pos, poly in G.placement_polys(rule, i, forms).items():
            slots = [1, 2] if i == 1 else [0, 1]
            slots.insert(pos, 0 if i == 1 else 2)
            flags = (True, False, False) if i == 1 else (True, True, False)
            checks.append(
                _identity(
                    f"{tag}/placement-identity[{forms}] i={i} position={pos}",
                    pts,
                    lambda p, f=flags, s=tuple(slots): engine_gadget(rule, f, p, s)[0],
                    poly,
                    engine_bound,
                )
            )
    if rule is Rule.BAYESIAN:
        for state in G.ClauseState.all_states():
            for pos in range(3):
                checks.append(
                    _identity(
                        f"{tag}/node-table[{forms}] position={pos} state={state.label()}",
                        pts,
                        lambda p, s=state, k=pos: engine_gadget(rule, s.flags, p, (0, 1, 2))[1][k],
                        G.bayes_literal_node_poly(pos, state, forms),
                        engine_bound,
                    )
                )
        checks.append(
            _first_failure(
                f"{tag}/likelihood-inequality",
                pts,
                lambda p: (p / (1 - p)) ** 2 * (1 - G.p_prime(p)) / G.p_prime(p) > 1,
            )
        )
    else:
        rng = random.Random(seed)
        ok, detail = True, "10 random tuples"
        for _ in range(10):
            pa, pb, pc, p = (Fraction(rng.randint(51, 99), 100) for _ in range(4))
            got = engine_general_majority(pa, pb, pc, p)
            want = G.majority_general_clause_clr(pa, pb, pc, p)
            if got != want:
                ok, detail = False, f"first counterexample (pa,pb,pc,p)=({pa},{pb},{pc},{p})"
                break
        checks.append(Check(f"{tag}/general-clause-formula", ok, detail))

    L = [G.clause_poly(rule, i, forms) for i in range(4)]
    chain_pts = grid(max(points, 100))
    checks.append(
        _first_failure(
            f"{tag}/ordering-chain[{forms}]", chain_pts, lambda p: L[3](p) >= L[2](p) >= L[1](p) >= L[0](p)
        )
    )
    c = 3 if rule is Rule.BAYESIAN else 6
    checks.append(
        _first_failure(
            f"{tag}/separation-bound[{forms}]",
            chain_pts,
            lambda p: (L[1](p) - L[0](p)) / (L[3](p) - L[1](p)) >= 1 / (c - c * p),
        )
    )
    checks.append(
        _first_failure(
            f"{tag}/endpoint-collapse[{forms}]",
            [Fraction(1, 2), Fraction(1)],
            lambda p: all(l(p) == G.gadget_size(rule) * p for l in L) and G.cell_poly(rule)(p) == 3 * p,
        )
    )
    for i in (1, 2):
        res = gadget_placement_search(G.ClauseState((True, False, False) if i == 1 else (True, True, False)), rule, Fraction(9, 10))
        want = 0 if i == 1 else 2
        got = res.distinguished_position()
        what = "on-literal first" if i == 1 else "off-literal last"
        checks.append(Check(f"{tag}/placement-search i={i} ({what})", got == want, f"argmax position {got}"))
    return checks


def engine_general_majority(pa, pb, pc, p) -> Fraction:
    """Engine CLR of a lone majority gadget fed by three source nodes whose
    signal accuracies are ``pa, pb, pc``, plus ``2p`` for its dummies."""
    edges = [(0, 5), (1, 6), (2, 7)]
    edges += [(d, t) for d in (3, 4) for t in (5, 6, 7)]
    edges += [(a, b) for a in (5, 6, 7) for b in (5, 6, 7) if a != b]
    net = Network(8, tuple(edges), Fraction(1, 2), p)
    report = joint_forward(net, Ordering(tuple(range(8))), Rule.MAJORITY, accuracies={0: pa, 1: pb, 2: pc})[0]
    return report.subset_clr(range(3, 8))


def cmd_verify_lemmas(args) -> int:
    rules = list(Rule) if args.rule == "both" else [Rule.parse(args.rule)]
    all_ok = True
    for rule in rules:
        for check in verify_lemmas(rule, args.points, args.forms):
            print(check.line())
            all_ok &= check.passed
    if args.rule in ("bayesian", "both"):
        for check in verify_apx(args.forms):
            print(check.line())
            all_ok &= check.passed
    return EXIT_OK if all_ok else EXIT_NEGATIVE


def verify_apx(forms: str = "paper") -> list[Check]:
    e = G.apx_epsilon_poly(Fraction(7, 8), forms)
    lo, hi = Fraction(93, 100), Fraction(94, 100)
    change = (e(lo) > 0) != (e(hi) > 0)
    return [
        Check(
            f"bayesian/apx-sign-change[{forms}] in (0.93, 0.94)",
            change,
            f"epsilon(0.93)={float(e(lo)):.6g}, epsilon(0.94)={float(e(hi)):.6g}",
        )
    ]


# -- sweep --------------------------------------------------------------------


def _dec(x: Fraction) -> str:
    return f"{float(x):.12g}"


def cmd_sweep(args) -> int:
    lo, hi, steps = args.p_from, args.p_to, args.steps
    if steps < 1 or lo >= hi:
        raise InputError(f"empty sweep range [{lo}, {hi}] with {steps} steps")
    if lo < Fraction(1, 2) or hi > 1:
        raise InputError("sweep range must lie inside [1/2, 1]")
    rule = Rule.parse(args.rule)
    ps = [lo + (hi - lo) * Fraction(k, steps) for k in range(steps + 1)]
    if args.curve == "clause-lr":
        L = [G.clause_poly(rule, i, args.forms) for i in range(4)]
        names = ["L0", "L1", "L2", "L3"]
        rows = [[l(p) for l in L] for p in ps]
    elif args.curve == "separation":
        L = [G.clause_poly(rule, i, args.forms) for i in range(4)]
        names = ["num", "den"]
        rows = [[L[1](p) - L[0](p), L[3](p) - L[1](p)] for p in ps]
    else:
        e = G.apx_epsilon_poly(args.delta, args.forms)
        names = ["epsilon"]
        rows = [[e(p)] for p in ps]
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", encoding="utf-8", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["p"] + names + ["p_exact"] + [f"{n}_exact" for n in names])
        for p, row in zip(ps, rows):
            w.writerow([_dec(p)] + [_dec(v) for v in row] + [format_rational(p)] + [format_rational(v) for v in row])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seqlearn", description="Exact sequential social learning toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)
    rules = ["bayesian", "majority"]
    forms_help = "closed forms to use: as printed ('paper') or derived by case analysis ('exact')"

    c = sub.add_parser("compile", help="compile a 3-CNF formula into a formula graph")
    c.add_argument("--rule", choices=rules, required=True)
    c.add_argument("--input", required=True)
    c.add_argument("--output", required=True)
    c.add_argument("--p", type=_rational, default=None)
    c.set_defaults(func=cmd_compile)

    r = sub.add_parser("lr", help="exact or Monte Carlo learning rate of a network under an ordering")
    r.add_argument("--graph", required=True)
    g = r.add_mutually_exclusive_group(required=True)
    g.add_argument("--ordering")
    g.add_argument("--assignment", help="bitstring; evaluates the canonical ordering")
    r.add_argument("--canonical", action="store_true", help="accepted for clarity alongside --assignment")
    r.add_argument("--rule", choices=rules, default=None)
    r.add_argument("--p", type=_rational, default=None)
    r.add_argument("--mode", choices=["exact", "mc"], default="exact")
    r.add_argument("--samples", type=int, default=100000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--cap", type=int, default=24)
    r.set_defaults(func=cmd_lr)

    d = sub.add_parser("decide", help="decide satisfiability through the learning-rate threshold")
    d.add_argument("--input", required=True)
    d.add_argument("--rule", choices=rules, required=True)
    d.set_defaults(func=cmd_decide)

    v = sub.add_parser("verify-lemmas", help="check closed forms and inequalities against the engine")
    v.add_argument("--rule", choices=rules + ["both"], default="both")
    v.add_argument("--points", type=int, default=25)
    v.add_argument("--forms", choices=G.FORMS, default="paper", help=forms_help)
    v.set_defaults(func=cmd_verify_lemmas)

    s = sub.add_parser("sweep", help="tabulate a curve as CSV")
    s.add_argument("--curve", choices=["clause-lr", "separation", "apx-epsilon"], required=True)
    s.add_argument("--rule", choices=rules, default="bayesian")
    s.add_argument("--p-from", type=_rational, default=Fraction(1, 2))
    s.add_argument("--p-to", type=_rational, default=Fraction(1))
    s.add_argument("--steps", type=int, default=100)
    s.add_argument("--delta", type=_rational, default=Fraction(7, 8))
    s.add_argument("--forms", choices=G.FORMS, default="paper", help=forms_help)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_sweep)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OrderingError, NetworkError, FormulaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StateExplosion as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
