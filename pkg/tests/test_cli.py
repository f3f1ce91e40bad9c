import csv
import json
from fractions import Fraction

import pytest

from seqlearn.cli import main


@pytest.fixture
def cnf(tmp_path):
    def write(text, name="f.cnf"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


TWO = "p cnf 3 2\n1 2 -3 0\n-1 2 3 0\n"
ONE = "p cnf 3 1\n1 2 -3 0\n"
COMPLETE = "p cnf 3 8\n" + "".join(f"{a} {2 * b} {3 * c} 0\n" for a in (1, -1) for b in (1, -1) for c in (1, -1))


class TestCompile:
    def test_bayesian_two_clauses(self, cnf, tmp_path, capsys):
        out = tmp_path / "g.json"
        assert main(["compile", "--rule", "bayesian", "--input", cnf(TWO), "--output", str(out)]) == 0
        text = capsys.readouterr().out
        assert "p_used: 2/3" in text and "nodes: 15" in text and "tau:" in text
        doc = json.loads(out.read_text())
        assert doc["p"] == "2/3" and doc["q"] == "1/2" and doc["variant"] == "bayesian"

    def test_majority_single_clause(self, cnf, tmp_path, capsys):
        out = tmp_path / "g.json"
        assert main(["compile", "--rule", "majority", "--input", cnf(ONE), "--output", str(out)]) == 0
        assert "nodes: 14" in capsys.readouterr().out

    def test_missing_file(self, tmp_path, capsys):
        code = main(["compile", "--rule", "bayesian", "--input", str(tmp_path / "none.cnf"), "--output", "x"])
        assert code == 2
        assert "cannot read" in capsys.readouterr().err

    def test_parse_error_has_line(self, cnf, capsys):
        assert main(["compile", "--rule", "bayesian", "--input", cnf("p cnf 3 1\n1 -1 2 0\n"), "--output", "x"]) == 2
        assert "line 2" in capsys.readouterr().err


def _compile(cnf, tmp_path, text, rule, extra=()):
    out = tmp_path / f"{rule}.json"
    main(["compile", "--rule", rule, "--input", cnf(text), "--output", str(out), *extra])
    return str(out)


class TestLr:
    def test_cell_graph(self, tmp_path, capsys):
        g = tmp_path / "cell.json"
        g.write_text(json.dumps({"n": 3, "edges": [[0, 1], [0, 2], [1, 2], [2, 1]], "q": "1/2", "p": "3/4"}))
        o = tmp_path / "cell.ord"
        o.write_text("0 1 2\n")
        assert main(["lr", "--graph", str(g), "--ordering", str(o), "--rule", "bayesian"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["clr"] == "147/64"

    def test_canonical_assignment(self, cnf, tmp_path, capsys):
        g = _compile(cnf, tmp_path, ONE, "bayesian", ["--p", "0.75"])
        capsys.readouterr()
        assert main(["lr", "--graph", g, "--canonical", "--assignment", "000"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["p"] == "3/4" and doc["rule"] == "bayesian"

    def test_mc_reproducible(self, cnf, tmp_path, capsys):
        g = _compile(cnf, tmp_path, ONE, "majority")
        capsys.readouterr()
        args = ["lr", "--graph", g, "--assignment", "101", "--mode", "mc", "--samples", "5000", "--seed", "7"]
        main(args)
        first = capsys.readouterr().out
        main(args)
        assert capsys.readouterr().out == first
        mc = json.loads(first)["mc"]
        assert abs(mc["estimate"] - json.loads(first)["lr_decimal"]) <= 4 * mc["stderr"]

    def test_mismatched_ordering(self, cnf, tmp_path, capsys):
        g = _compile(cnf, tmp_path, ONE, "bayesian")
        o = tmp_path / "short.ord"
        o.write_text("0 1 2\n")
        assert main(["lr", "--graph", g, "--ordering", str(o)]) == 2

    def test_state_cap(self, cnf, tmp_path, capsys):
        g = _compile(cnf, tmp_path, ONE, "majority")
        capsys.readouterr()
        assert main(["lr", "--graph", g, "--assignment", "000", "--cap", "3"]) == 3
        assert "width" in capsys.readouterr().err


class TestDecide:
    def test_satisfiable(self, cnf, capsys):
        assert main(["decide", "--input", cnf(TWO), "--rule", "bayesian"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["satisfiable"] is True and doc["p_used"] == "2/3"
        assert set(doc) >= {"lr_star", "tau", "epsilon", "best_assignment"}

    def test_unsatisfiable(self, cnf, capsys):
        assert main(["decide", "--input", cnf(COMPLETE), "--rule", "majority"]) == 1
        assert json.loads(capsys.readouterr().out)["satisfiable"] is False

    def test_single_clause(self, cnf, capsys):
        assert main(["decide", "--input", cnf(ONE), "--rule", "bayesian"]) == 2


class TestVerify:
    def test_exact_forms_bayesian(self, capsys):
        code = main(["verify-lemmas", "--rule", "bayesian", "--points", "13", "--forms", "exact"])
        lines = capsys.readouterr().out.splitlines()
        failed = [l for l in lines if l.startswith("FAIL")]
        # everything checks out except the bracket for the sign change
        assert failed == [l for l in failed if "apx-sign-change" in l] and len(failed) == 1
        assert code == 1

    def test_insufficient_points(self, capsys):
        assert main(["verify-lemmas", "--rule", "majority", "--points", "2"]) != 0
        assert "insufficient points" in capsys.readouterr().out

    def test_printed_forms_report_counterexamples(self, capsys):
        assert main(["verify-lemmas", "--rule", "majority", "--points", "18"]) == 1
        out = capsys.readouterr().out
        assert "FAIL majority/L0-identity[paper]: first counterexample" in out
        assert "PASS majority/L2-identity[paper]" in out


class TestSweep:
    def _rows(self, path):
        with open(path, newline="") as fh:
            return list(csv.reader(fh))

    def test_clause_lr(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["sweep", "--curve", "clause-lr", "--rule", "bayesian", "--steps", "100", "--out", str(out)]) == 0
        rows = self._rows(out)
        assert rows[0][:5] == ["p", "L0", "L1", "L2", "L3"]
        assert len(rows) == 102
        assert rows[1][6:10] == ["3/2"] * 4 and rows[-1][6:10] == ["3/1"] * 4
        first = [float(x) for x in rows[50][1:5]]
        assert first == sorted(first)

    def test_separation_denominator_vanishes_faster(self, tmp_path):
        out = tmp_path / "s.csv"
        main(["sweep", "--curve", "separation", "--p-from", "9/10", "--p-to", "99/100", "--steps", "9", "--out", str(out)])
        rows = self._rows(out)
        assert rows[0][:3] == ["p", "num", "den"]
        ratios = [Fraction(r[4]) / Fraction(r[5]) for r in rows[1:]]
        assert ratios == sorted(ratios)

    def test_apx_epsilon(self, tmp_path):
        out = tmp_path / "e.csv"
        main(["sweep", "--curve", "apx-epsilon", "--p-from", "0.9", "--p-to", "1", "--steps", "100", "--out", str(out)])
        rows = self._rows(out)
        assert rows[0][:2] == ["p", "epsilon"]
        signs = [Fraction(r[3]) > 0 for r in rows[1:-1]]
        assert signs[0] is False and signs[-1] is True

    def test_twelve_significant_digits(self, tmp_path, capsys):
        main(["sweep", "--curve", "apx-epsilon", "--p-from", "2/3", "--p-to", "3/4", "--steps", "1"])
        row = capsys.readouterr().out.splitlines()[1].split(",")
        assert row[0] == "0.666666666667"

    def test_deterministic(self, tmp_path, capsys):
        main(["sweep", "--curve", "clause-lr", "--rule", "majority", "--steps", "7"])
        a = capsys.readouterr().out
        main(["sweep", "--curve", "clause-lr", "--rule", "majority", "--steps", "7"])
        assert capsys.readouterr().out == a

    def test_empty_range(self):
        assert main(["sweep", "--curve", "clause-lr", "--p-from", "0.9", "--p-to", "0.8"]) == 2
        assert main(["sweep", "--curve", "clause-lr", "--steps", "0"]) == 2
