import json
from fractions import Fraction as Frac
from itertools import combinations

import pytest

import cli
from graph_core import Graph, canonical_key, complete_minus, graph6_decode, graph6_encode
from orchestrator import PackingSweepOrchestrator

K6_MINUS_MATCHING = graph6_encode(complete_minus(6, [(0, 1), (2, 3)]))


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("TRIPACK_JOBS", raising=False)
    return tmp_path


def audit_sessions(workdir):
    return [json.loads(p.read_text()) for p in sorted((workdir / "audit_logs").glob("*.json"))]


class TestEnumerateCommand:

    def test_triangle(self, workdir, capsys):
        assert cli.main(["--out", "results", "enumerate", "--n", "3", "--m", "3"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "total\t1" in out

    def test_edge_count_out_of_range(self, workdir):
        assert cli.main(["enumerate", "--n", "4", "--m", "7"]) == cli.EXIT_USAGE

    def test_seven_vertices_three_missing_edges(self, workdir):
        orch = PackingSweepOrchestrator(out_dir="results")
        result = orch.enumerate(7, 18)
        assert result["success"]
        assert result["total"] == 5
        assert (workdir / "results" / "N7M18").is_dir()
        assert audit_sessions(workdir)[0]["status"] == "completed"


class TestSolveCommand:

    def test_k5_has_zero_optimum(self, workdir, capsys):
        text = graph6_encode(Graph.complete(5))
        assert cli.main(["solve", text]) == cli.EXIT_OK
        captured = capsys.readouterr()
        assert "optimum\t0" in captured.err
        assert json.loads(captured.out)["graph"]

    def test_six_vertex_counterexample(self, workdir):
        result = PackingSweepOrchestrator().solve(K6_MINUS_MATCHING)
        assert result["success"]
        assert Frac(result["optimum"]) > 0

    def test_bad_graph6(self, workdir):
        assert cli.main(["solve", "C!"]) == cli.EXIT_USAGE
        assert audit_sessions(workdir)[0]["status"] == "failed"

    def test_capacities_file(self, workdir):
        caps = workdir / "caps.json"
        caps.write_text(json.dumps([[0, 1, "0"]]))
        out = workdir / "cert.json"
        text = graph6_encode(Graph.complete(4))
        assert cli.main(["solve", text, "--capacities", str(caps), "--output", str(out)]) == cli.EXIT_OK
        assert json.loads(out.read_text())["uncovered"]

    def test_malformed_capacities(self, workdir):
        caps = workdir / "caps.json"
        caps.write_text(json.dumps([[0, 1]]))
        assert cli.main(["solve", graph6_encode(Graph.complete(4)), "--capacities", str(caps)]) == cli.EXIT_USAGE


class TestConstructCommand:

    def test_complete_graph(self, workdir):
        out = workdir / "k14.json"
        text = graph6_encode(Graph.complete(14))
        assert cli.main(["construct", text, "--a", "0", "--output", str(out)]) == cli.EXIT_OK
        assert cli.main(["verify", str(out), "--graph6", text, "--a", "0"]) == cli.EXIT_OK
        constructed = [s for s in audit_sessions(workdir) if s["command"] == "construct"][0]
        assert constructed["trace"][0]["route"] == "complete"

    def test_below_range(self, workdir):
        text = graph6_encode(Graph.complete(6))
        assert cli.main(["construct", text, "--a", "0"]) == cli.EXIT_USAGE


class TestVerifyCommand:

    def _certificate(self, workdir):
        out = workdir / "cert.json"
        assert cli.main(["solve", K6_MINUS_MATCHING, "--output", str(out)]) == cli.EXIT_OK
        return out

    def test_round_trip(self, workdir):
        out = self._certificate(workdir)
        assert cli.main(["verify", str(out), "--graph6", K6_MINUS_MATCHING]) == cli.EXIT_OK

    def test_tampered_weight(self, workdir):
        out = self._certificate(workdir)
        doc = json.loads(out.read_text())
        doc["triangles"][0][3] = "1"
        out.write_text(json.dumps(doc))
        assert cli.main(["verify", str(out)]) == cli.EXIT_CLAIM_FAILED
        verified = [s for s in audit_sessions(workdir) if s["command"] == "verify"]
        assert verified[0]["status"] == "rejected"

    def test_tighter_budget_rejected(self, workdir):
        out = self._certificate(workdir)
        assert cli.main(["verify", str(out), "--a", "0"]) == cli.EXIT_CLAIM_FAILED

    def test_missing_file(self, workdir):
        assert cli.main(["verify", str(workdir / "absent.json")]) == cli.EXIT_USAGE


class TestProveCommand:

    def test_seven_vertices(self, workdir):
        assert cli.main(["--out", "results", "prove", "--n", "7", "--a", "0"]) == cli.EXIT_OK
        report = (workdir / "results" / "N7_a0" / "report.txt").read_text()
        lines = report.splitlines()
        assert lines[0] == "index\tgraph6\toptimum\tstatus"
        assert "# graphs\t5" in lines
        assert "# failed\t0" in lines
        assert len(list((workdir / "results" / "N7_a0" / "certificates").glob("*.json"))) == 5
        assert not (workdir / "results" / "N7_a0" / "witness.json").exists()

    def test_report_is_reproducible(self, workdir):
        orch = PackingSweepOrchestrator(out_dir="results")
        first = orch.prove(7, 0, out_dir="run1")
        second = PackingSweepOrchestrator(cache_dir="other-cache").prove(7, 0, out_dir="run2")
        assert first["all_passed"] and second["all_passed"]
        assert (workdir / "run1" / "report.txt").read_bytes() == (workdir / "run2" / "report.txt").read_bytes()

    def test_failing_sweep_keeps_witness(self, workdir, capsys):
        assert cli.main(["--out", "results", "prove", "--n", "6", "--a", "0"]) == cli.EXIT_CLAIM_FAILED
        assert "FAIL\t" in capsys.readouterr().out
        witness = json.loads((workdir / "results" / "N6_a0" / "witness.json").read_text())
        assert Frac(witness["uncovered"]) > 0
        assert audit_sessions(workdir)[0]["status"] == "completed"

    def test_needs_n_or_relevant(self, workdir):
        assert cli.main(["prove"]) == cli.EXIT_USAGE

    def test_pdf_report(self, workdir):
        result = PackingSweepOrchestrator(out_dir="results").prove(7, 0, pdf=True)
        assert result["success"]
        assert result["pdf_report"].endswith(".pdf")

    @pytest.mark.slow
    def test_parallel_sweep_matches_serial(self, workdir):
        serial = PackingSweepOrchestrator(cache_dir="c1").prove(9, 0, out_dir="serial")
        parallel = PackingSweepOrchestrator(cache_dir="c2", jobs=2).prove(9, 0, out_dir="parallel")
        assert serial["all_passed"] and parallel["all_passed"]
        assert (workdir / "serial" / "report.txt").read_bytes() == (workdir / "parallel" / "report.txt").read_bytes()


class TestGlobalFlags:

    def test_flags_after_the_subcommand(self, workdir):
        assert cli.main(["prove", "--n", "7", "--a", "0", "--jobs", "1", "--out", "after"]) == cli.EXIT_OK
        assert (workdir / "after" / "N7_a0" / "report.txt").is_file()

    def test_flags_before_the_subcommand_are_kept(self):
        args = cli.build_parser().parse_args(["--out", "before", "--jobs", "3", "--no-presolve", "enumerate", "--n", "4", "--m", "6"])
        assert args.out == "before"
        assert args.jobs == 3
        assert args.presolve is False
        assert args.cutoff == 13

    def test_subcommand_value_wins(self):
        args = cli.build_parser().parse_args(["--out", "before", "solve", "C~", "--out", "after", "--cutoff", "12"])
        assert args.out == "after"
        assert args.cutoff == 12
        assert args.presolve is True
        assert args.verbose is False


def test_rational_argument():
    assert cli.rational("1/3") == Frac(1, 3)
    with pytest.raises(Exception):
        cli.rational("x")


@pytest.mark.slow
def test_ten_vertices_with_ten_missing_edges_exceed_four(workdir):
    assert cli.main(["--out", "results", "prove", "--n", "10", "--a", "4"]) == cli.EXIT_CLAIM_FAILED
    witness = json.loads((workdir / "results" / "N10_a4" / "witness.json").read_text())
    # K10 minus a K5 alone has optimum 5, so the worst graph reaches at least that
    assert Frac(witness["uncovered"]) >= 5
    report = (workdir / "results" / "N10_a4" / "report.txt").read_text()
    failing = [line.split("\t")[1] for line in report.splitlines() if line.endswith("FAIL")]
    k10_minus_k5 = canonical_key(complete_minus(10, list(combinations(range(5), 2))))
    assert k10_minus_k5 in {canonical_key(graph6_decode(text)) for text in failing}
