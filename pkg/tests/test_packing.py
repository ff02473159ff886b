import json
from fractions import Fraction as Frac
from itertools import combinations
from pathlib import Path

import pytest

from conftest import random_near_complete
from degseq_enum import ProductionGraphEnumerator
from graph_core import Graph, complete_minus, graph6_decode, tight_family_graph
from packing import (
    FractionalPacking,
    PackingProblem,
    certificate_from_json,
    certificate_to_json,
    combine,
    find_packing,
    lift,
    make_certificate,
    min_uncovered,
    packing_lp,
    read_certificate,
    restrict,
    symmetric_complete_packing,
    uncovered_profile,
    verify_certificate,
    verify_packing,
    write_certificate,
)
from ratlp import ProductionLPSolver

F = Frac


@pytest.fixture(scope="module")
def solver():
    return ProductionLPSolver(presolve=True)


class TestMinUncovered:

    def test_k5_decomposes(self, solver):
        value, packing = min_uncovered(PackingProblem(Graph.complete(5)), solver)
        assert value == 0
        assert verify_packing(PackingProblem(Graph.complete(5)), packing).passed

    def test_k4_with_half_cap(self):
        value, _ = min_uncovered(PackingProblem(Graph.complete(4), triangle_cap=F(1, 2)))
        assert value == 0

    @pytest.mark.parametrize("pairs", [[(0, 1), (2, 3)], [(0, 1), (1, 2)]])
    def test_six_vertex_counterexamples(self, solver, pairs):
        g = complete_minus(6, pairs)
        value, packing = min_uncovered(PackingProblem(g, triangle_cap=F(1)), solver)
        assert value > 0
        report = verify_packing(PackingProblem(g, triangle_cap=F(1), target_uncovered=value), packing)
        assert report.passed
        assert report.uncovered == value

    @pytest.mark.parametrize("n", [8, 9, 10])
    def test_tight_family_has_no_decomposition(self, solver, n):
        value, _ = min_uncovered(PackingProblem(tight_family_graph(n), triangle_cap=F(1)), solver)
        assert value > 0

    @pytest.mark.parametrize("pairs", [[], [(0, 1)], [(0, 1), (2, 3)], [(0, 1), (0, 2), (0, 3)], [(0, 1), (1, 2), (2, 3)]])
    def test_seven_vertices_with_few_missing_edges(self, solver, pairs):
        value, _ = min_uncovered(PackingProblem(complete_minus(7, pairs)), solver)
        assert value == 0

    def test_triangle_free_graph(self):
        g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
        value, packing = min_uncovered(PackingProblem(g))
        assert value == 3
        assert packing.weights == {}

    def test_exact_and_presolve_agree(self):
        p = PackingProblem(complete_minus(6, [(0, 1), (2, 3)]))
        exact, _ = min_uncovered(p, ProductionLPSolver(presolve=False))
        fast, _ = min_uncovered(p, ProductionLPSolver(presolve=True))
        assert exact == fast

    def test_capacities_shrink_the_lp(self):
        g = Graph.complete(4)
        p = PackingProblem(g, capacities={(0, 1): F(0)})
        lp, support = packing_lp(p)
        assert all(not (0 in t and 1 in t) for t in support)
        assert lp.constant == 5


class TestFindPacking:

    def test_meets_target(self, solver):
        p = PackingProblem(complete_minus(8, [(0, 1), (2, 3), (4, 5)]))
        packing = find_packing(p, solver)
        assert packing is not None
        assert verify_packing(p, packing).passed

    def test_none_when_target_is_unreachable(self):
        p = PackingProblem(complete_minus(6, [(0, 1), (2, 3)]), target_uncovered=F(0))
        assert find_packing(p) is None


class TestVerifyPacking:

    def test_reports_every_problem(self):
        g = complete_minus(5, [(0, 1)])
        packing = FractionalPacking({(0, 1, 2): F(1, 4), (2, 3, 4): F(3, 4), (1, 2, 3): F(-1, 8)})
        report = verify_packing(PackingProblem(g), packing)
        assert not report.passed
        assert report.invalid_triangles == [(0, 1, 2)]
        assert report.negative_weights == [(1, 2, 3)]
        assert report.max_weight == F(3, 4)
        assert any("exceeds cap" in p for p in report.problems)

    def test_over_capacity(self):
        g = Graph.complete(4)
        packing = FractionalPacking({(0, 1, 2): F(1, 2), (0, 1, 3): F(1, 2)})
        report = verify_packing(PackingProblem(g, capacities={(0, 1): F(1, 2)}, target_uncovered=F(10)), packing)
        assert report.over_capacity == [((0, 1), F(1), F(1, 2))]

    def test_uncovered_profile(self):
        g = Graph.complete(4)
        packing = FractionalPacking({(0, 1, 2): F(1, 2)})
        profile = uncovered_profile(PackingProblem(g), packing)
        assert profile[(0, 1)] == F(1, 2)
        assert profile[(2, 3)] == 1
        assert sum(profile.values()) == 6 - F(3, 2)


class TestPackingAlgebra:

    def test_symmetric_complete_packing(self):
        packing = symmetric_complete_packing(14)
        loads = packing.edge_weights()
        assert set(loads.values()) == {F(1)}
        assert packing.max_weight() == F(1, 12)

    def test_symmetric_rejects_heavy_weight(self):
        with pytest.raises(ValueError):
            symmetric_complete_packing(3)

    def test_combine(self):
        a = FractionalPacking({(0, 1, 2): F(1, 2)})
        b = FractionalPacking({(0, 1, 2): F(1, 4), (1, 2, 3): F(1)})
        mixed = combine([(F(1, 2), a), (F(1, 2), b)])
        assert mixed.weights == {(0, 1, 2): F(3, 8), (1, 2, 3): F(1, 2)}
        with pytest.raises(ValueError):
            combine([(F(-1), a)])

    def test_lift_and_restrict(self):
        packing = FractionalPacking({(0, 1, 2): F(1, 3)})
        lifted = lift(packing, (4, 2, 7))
        assert lifted.weights == {(2, 4, 7): F(1, 3)}
        assert restrict(lifted, [4, 2, 7]).weights == {(0, 1, 2): F(1, 3)}

    def test_zero_weights_dropped(self):
        assert FractionalPacking({(2, 1, 0): F(0)}).weights == {}


class TestCertificates:

    def _certificate(self):
        g = complete_minus(6, [(0, 1), (2, 3)])
        p = PackingProblem(g)
        value, packing = min_uncovered(p)
        return g, make_certificate(p, packing, value, provenance="exact LP optimum")

    def test_self_check(self):
        g, cert = self._certificate()
        assert verify_certificate(cert).passed
        assert verify_certificate(cert, graph=g).passed

    def test_json_and_file(self, tmp_path):
        g, cert = self._certificate()
        path = write_certificate(cert, tmp_path / "cert.json")
        doc = json.loads(path.read_text())
        assert doc["graph"] == cert.graph
        assert doc["beta"] == "1/2"
        restored = read_certificate(path)
        assert restored.packing.weights == cert.packing.weights
        assert verify_certificate(restored, graph=g).passed

    def test_tampered_weight_fails(self):
        _, cert = self._certificate()
        doc = certificate_to_json(cert)
        doc["triangles"][0][3] = "1"
        assert not verify_certificate(certificate_from_json(doc)).passed

    def test_wrong_graph_fails(self):
        _, cert = self._certificate()
        other = complete_minus(6, [(0, 1), (1, 2)])
        assert not verify_certificate(cert, graph=other).passed

    def test_tighter_external_bound(self):
        _, cert = self._certificate()
        assert cert.claimed_uncovered > 0
        assert not verify_certificate(cert, a=F(0)).passed

    def test_malformed_json(self):
        with pytest.raises(ValueError):
            certificate_from_json({"graph": "E~~w"})

    def test_duplicate_triangle_rejected(self):
        _, cert = self._certificate()
        doc = certificate_to_json(cert)
        u, v, w, x = doc["triangles"][0]
        doc["triangles"].append([w, u, v, x])
        with pytest.raises(ValueError, match="listed twice"):
            certificate_from_json(doc)

    def test_duplicate_capacity_rejected(self):
        doc = certificate_to_json(make_certificate(
            PackingProblem(Graph.complete(4), capacities={(0, 1): F(1, 2)}), FractionalPacking(), F(5, 2)
        ))
        doc["capacities"].append(list(doc["capacities"][0]))
        with pytest.raises(ValueError, match="listed twice"):
            certificate_from_json(doc)


FIXTURES = Path(__file__).parent / "fixtures"
K6_MINUS_MATCHING = complete_minus(6, [(0, 1), (2, 3)])
K10_MINUS_K5 = complete_minus(10, list(combinations(range(5), 2)))


def optimum(g: Graph, solver, cap=F(1, 2), capacities=None) -> Frac:
    return min_uncovered(PackingProblem(g, capacities=capacities, triangle_cap=cap), solver)[0]


class TestPackingInvariants:

    @pytest.mark.parametrize("cap,expected", [(F(1, 3), F(2)), (F(1, 2), F(1)), (F(1), F(1))])
    def test_k6_minus_matching_optimum(self, solver, cap, expected):
        assert optimum(K6_MINUS_MATCHING, solver, cap) == expected
        assert optimum(K6_MINUS_MATCHING, ProductionLPSolver(presolve=False), cap) == expected

    def test_k10_minus_k5_exceeds_four(self, solver):
        assert K10_MINUS_K5.missing_count == 10
        assert optimum(K10_MINUS_K5, solver) == 5

    def test_triangle_cap_is_monotone(self, solver, rng):
        for _ in range(8):
            g = random_near_complete(7, rng.randint(2, 6), rng)
            values = [optimum(g, solver, cap) for cap in (F(1, 3), F(1, 2), F(1))]
            assert values[0] >= values[1] >= values[2]

    def test_adding_an_edge(self, solver, rng):
        for _ in range(8):
            g = random_near_complete(7, rng.randint(3, 7), rng)
            u, v = rng.choice([(x, y) for x, y in combinations(range(7), 2) if not g.has_edge(x, y)])
            bigger = Graph.from_edges(7, g.edges() + [(u, v)])
            before, after = optimum(g, solver), optimum(bigger, solver)
            assert after <= before + 1
            assert before <= after + 2

    @pytest.mark.parametrize("g", [K6_MINUS_MATCHING, complete_minus(6, [(0, 1), (1, 2)]), Graph.complete(5), tight_family_graph(8)])
    def test_halving_capacities_and_cap_halves_the_optimum(self, solver, g):
        halves = {e: F(1, 2) for e in g.edges()}
        assert optimum(g, solver, F(1, 2), halves) == optimum(g, solver, F(1)) / 2

    def test_convex_combination(self, solver):
        p = PackingProblem(K6_MINUS_MATCHING, target_uncovered=F(13))
        value, best = min_uncovered(p, solver)
        light = FractionalPacking({(0, 2, 4): F(1, 2), (1, 3, 5): F(1, 3)})
        light_uncovered = verify_packing(p, light).uncovered
        for lam in (F(0), F(1, 3), F(1, 2), F(1)):
            mixed = combine([(lam, best), (1 - lam, light)])
            report = verify_packing(p, mixed)
            assert report.passed
            assert report.uncovered == lam * value + (1 - lam) * light_uncovered

    def test_stored_sharpness_witness(self):
        cert = read_certificate(FIXTURES / "witness_n10_a4.json")
        assert graph6_decode(cert.graph) == K10_MINUS_K5
        assert cert.claimed_uncovered == 5
        assert verify_certificate(cert).passed
        assert verify_certificate(cert, a=F(5)).passed
        assert not verify_certificate(cert, a=F(4)).passed


class TestPresolveAgreement:

    @pytest.mark.parametrize("n", [7, pytest.param(8, marks=pytest.mark.slow), pytest.param(9, marks=pytest.mark.slow)])
    def test_sweep_graphs(self, n):
        fast, exact = ProductionLPSolver(presolve=True), ProductionLPSolver(presolve=False)
        texts = ProductionGraphEnumerator().graphs(n, n * (n - 1) // 2 - (n - 4))
        assert texts
        for text in texts:
            g = graph6_decode(text)
            assert optimum(g, fast) == optimum(g, exact), text
