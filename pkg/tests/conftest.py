import random
from fractions import Fraction

import pytest

from seqlearn.model import CnfFormula, Network, Ordering

CELL_EDGES = ((0, 1), (0, 2), (1, 2), (2, 1))


def cell_network(p) -> Network:
    return Network(3, CELL_EDGES, Fraction(1, 2), Fraction(p))


def random_instance(rng: random.Random, n_lo: int = 1, n_hi: int = 8, q=Fraction(1, 2)):
    """Random digraph, random ordering and random rational accuracy."""
    n = rng.randint(n_lo, n_hi)
    density = rng.choice((0.2, 0.35, 0.5))
    edges = tuple((u, v) for u in range(n) for v in range(n) if u != v and rng.random() < density)
    p = Fraction(rng.randint(51, 99), 100)
    order = list(range(n))
    rng.shuffle(order)
    return Network(n, edges, q, p), Ordering(tuple(order))


def random_formula(rng: random.Random, n_lo=3, n_hi=8, m_lo=2, m_hi=16) -> CnfFormula:
    n = rng.randint(n_lo, n_hi)
    m = rng.randint(m_lo, m_hi)
    clauses = []
    for _ in range(m):
        vs = rng.sample(range(1, n + 1), 3)
        clauses.append([v * rng.choice((1, -1)) for v in vs])
    return CnfFormula.from_ints(n, clauses)


COMPLETE = CnfFormula.from_ints(3, [[a, 2 * b, 3 * c] for a in (1, -1) for b in (1, -1) for c in (1, -1)])


@pytest.fixture
def rng():
    return random.Random(20240601)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one verdict line per acceptance criterion; the lines are echoed
    in the terminal summary so they show up without ``-s``."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        lines[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
