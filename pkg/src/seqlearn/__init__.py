"""Exact inference for sequential social learning on directed networks, and
the 3-CNF reduction gadgets built on it."""

from .inference import LearningReport, joint_forward, mc_estimate, naive_enumeration_lr
from .model import Assignment, CnfFormula, FormulaGraph, Network, Ordering, Rule, ordering_from_list
from .polynomial import Polynomial
from .reduction import build_formula_graph, canonical_ordering, parse_dimacs

__all__ = [
    "Assignment",
    "CnfFormula",
    "FormulaGraph",
    "LearningReport",
    "Network",
    "Ordering",
    "Polynomial",
    "Rule",
    "build_formula_graph",
    "canonical_ordering",
    "joint_forward",
    "mc_estimate",
    "naive_enumeration_lr",
    "ordering_from_list",
    "parse_dimacs",
]

__version__ = "0.1.0"
