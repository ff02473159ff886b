import random
from fractions import Fraction as Frac
from itertools import combinations, permutations

import pytest

from conftest import random_near_complete
from constructor import (
    AuxMatchingInstance,
    CaseContext,
    ConstructionError,
    PreconditionError,
    ProductionPackingConstructor,
    ZETA,
    dispatch_case,
    solve_aux_matching,
    symmetrize,
)
from graph_core import Graph, complete_minus
from packing import FractionalPacking, PackingProblem, verify_packing
from reduction import ReductionError, WeightedGraph

F = Frac


def cycle_pairs(vertices):
    k = len(vertices)
    return [(vertices[i], vertices[(i + 1) % k]) for i in range(k)]


# n = 14 graphs with exactly n - 4 + a missing edges, one per case
CASE_ONE = (complete_minus(14, [(0, v) for v in range(1, 6)] + [(6, 7), (8, 9), (10, 11), (12, 13), (1, 2)]), 0)
CASE_TWO = (complete_minus(14, [(i, i + 1) for i in range(10)]), 0)
CASE_THREE_FIRST = (complete_minus(14, cycle_pairs(list(range(10)))), 0)
CASE_THREE_SECOND = (complete_minus(14, cycle_pairs(list(range(7))) + [(0, 2), (1, 3), (2, 4)]), 0)
CASE_FOUR = (complete_minus(14, cycle_pairs(list(range(10))) + [(0, 5), (1, 6), (2, 7), (3, 8)]), 4)


@pytest.fixture(scope="module")
def engine():
    return ProductionPackingConstructor()


def assert_valid(g: Graph, a: int, packing: FractionalPacking):
    report = verify_packing(PackingProblem(g, target_uncovered=F(a)), packing)
    assert report.passed, report.problems[:5]
    assert report.max_weight <= F(1, 2)


class TestDispatch:

    @pytest.mark.parametrize("instance,expected", [
        (CASE_ONE, 1),
        (CASE_TWO, 2),
        (CASE_THREE_FIRST, 3),
        (CASE_THREE_SECOND, 3),
        (CASE_FOUR, 4),
    ])
    def test_case_selection(self, instance, expected):
        g, a = instance
        assert g.missing_count == g.n - 4 + a
        assert dispatch_case(CaseContext.from_graph(g, a)) == expected

    def test_context_partition(self):
        g, a = CASE_THREE_FIRST
        ctx = CaseContext.from_graph(g, a)
        assert ctx.Z == (10, 11, 12, 13)
        assert ctx.U == tuple(range(10))
        assert ctx.m == 4


class TestSymmetrize:

    def test_orbit_average_equals_permutation_average(self):
        rng = random.Random(1)
        g = complete_minus(8, [(0, 1), (1, 2)])
        zs = [4, 5, 6, 7]
        tris = [t for t in combinations(range(8), 3) if all(g.has_edge(u, v) for u, v in combinations(t, 2))]
        packing = FractionalPacking({t: F(rng.randint(0, 6), 12) for t in rng.sample(tris, 15)})

        total = {}
        perms = list(permutations(zs))
        for image in perms:
            mapping = list(range(8))
            for z, w in zip(zs, image):
                mapping[z] = w
            for t, x in packing.relabel(mapping).weights.items():
                total[t] = total.get(t, F(0)) + x / len(perms)
        assert symmetrize(packing, zs).weights == {t: x for t, x in total.items() if x}

    def test_preserves_edge_loads_outside_z(self):
        packing = FractionalPacking({(0, 1, 4): F(1, 2), (0, 1, 2): F(1, 4)})
        sym = symmetrize(packing, [4, 5])
        assert sym.weights == {(0, 1, 4): F(1, 4), (0, 1, 5): F(1, 4), (0, 1, 2): F(1, 4)}
        assert sym.edge_weight(0, 1) == F(3, 4)


class TestAuxMatching:

    def test_feasible_instance(self):
        inst = AuxMatchingInstance(
            units=(0, 1, 2),
            tau_u0={0: F(1), 1: F(1, 2), 2: F(0)},
            tau_zeta=F(1, 2),
            tau_u1={0: F(1), 1: F(1), 2: F(1)},
        )
        report = solve_aux_matching(inst)
        assert report.feasible
        assert sum((report.into(u, 0) for u in (1, 2)), F(0)) == 1
        assert report.into(0, 0) == 0
        assert sum((report.into(u, ZETA) for u in (0, 1, 2)), F(0)) == F(1, 2)
        for u in (0, 1, 2):
            received = sum((w for (x, y), w in report.nu.items() if y == u), F(0))
            assert received <= 1

    def test_total_budget_violation(self):
        inst = AuxMatchingInstance(
            units=(0, 1),
            tau_u0={0: F(2), 1: F(1)},
            tau_zeta=F(0),
            tau_u1={0: F(1), 1: F(1)},
        )
        report = solve_aux_matching(inst)
        assert not report.feasible
        assert report.violated.startswith("Y")

    def test_own_partner_is_excluded(self):
        # all of Y's budget sits on 0_1, which 0_0 may not use
        inst = AuxMatchingInstance(
            units=(0, 1),
            tau_u0={0: F(1), 1: F(0)},
            tau_zeta=F(0),
            tau_u1={0: F(3), 1: F(0)},
        )
        report = solve_aux_matching(inst)
        assert not report.feasible
        assert "0_1" in report.violated

    def test_empty_demand(self):
        inst = AuxMatchingInstance(units=(0,), tau_u0={0: F(0)}, tau_zeta=F(0), tau_u1={0: F(2)})
        report = solve_aux_matching(inst)
        assert report.feasible
        assert report.nu == {}


class TestPreconditions:

    def test_below_range(self, engine):
        with pytest.raises(PreconditionError):
            engine.construct_packing(Graph.complete(6), 0)

    def test_too_many_missing_edges(self, engine):
        g = complete_minus(14, [(i, i + 1) for i in range(13)])
        with pytest.raises(PreconditionError, match="missing edges"):
            engine.construct_packing(g, 2)

    def test_a_out_of_range(self, engine):
        with pytest.raises(PreconditionError):
            engine.construct_packing(Graph.complete(14), 5)

    def test_small_n_needs_zero_budget(self, engine):
        with pytest.raises(PreconditionError):
            engine.construct_packing(complete_minus(9, [(0, 1)]), 1)

    def test_cutoff_floor(self):
        with pytest.raises(ValueError):
            ProductionPackingConstructor(lp_cutoff=9)


class TestConstructPacking:

    def test_complete_graph(self, engine):
        g = Graph.complete(14)
        packing = engine.construct_packing(g, 0)
        assert_valid(g, 0, packing)
        assert engine.trace[0]["route"] == "complete"

    def test_lp_range(self, engine):
        rng = random.Random(4)
        g = random_near_complete(11, 9, rng)
        packing = engine.construct_packing(g, 2)
        assert_valid(g, 2, packing)
        assert engine.trace[0]["route"] == "lp"

    def test_seven_vertices(self, engine):
        g = complete_minus(7, [(0, 1), (2, 3), (4, 5)])
        assert_valid(g, 0, engine.construct_packing(g, 0))

    def test_fewer_missing_edges_are_padded(self, engine):
        g = complete_minus(14, [(0, 1), (2, 3)])
        packing = engine.construct_packing(g, 0)
        assert_valid(g, 0, packing)
        assert engine.trace[0]["route"] == "padding"

    def test_weighted_subproblem_is_split_for_any_denominator(self, monkeypatch):
        engine = ProductionPackingConstructor()
        g = complete_minus(14, [(i, i + 1) for i in range(9)])
        wg = WeightedGraph(g, {(9, 10): F(1, 17)})
        built = []
        construct = engine._construct

        def counting(h, a, depth):
            if depth == 1:
                built.append(h)
            return construct(h, a, depth)

        monkeypatch.setattr(engine, "_construct", counting)
        packing = engine._solve_weighted(wg, 0, 0)
        top = [entry for entry in engine.trace if entry["depth"] == 0]
        assert [entry["route"] for entry in top] == ["split"]
        split = top[0]
        assert split["r"] == 17
        assert split["distinct"] == 2
        assert sorted(h.missing_count for h in built) == [9, 10]
        assert verify_packing(wg.problem(F(0)), packing).passed

    @pytest.mark.parametrize("instance,route", [
        (CASE_ONE, "case1"),
        (CASE_TWO, "case2"),
        (CASE_THREE_FIRST, "case3-first"),
        (CASE_THREE_SECOND, "case3-second"),
        (CASE_FOUR, "case4"),
    ])
    def test_each_case(self, instance, route):
        engine = ProductionPackingConstructor()
        g, a = instance
        packing = engine.construct_packing(g, a)
        assert_valid(g, a, packing)
        top = [entry for entry in engine.trace if entry["depth"] == 0]
        assert top[0]["route"].startswith(route)

    @pytest.mark.parametrize("a", [0, 1, 2, 3, 4])
    def test_random_instance(self, engine, a):
        rng = random.Random(100 + a)
        g = random_near_complete(14, 10 + a, rng)
        assert_valid(g, a, engine.construct_packing(g, a))

    def test_certificate(self, engine):
        g, a = CASE_TWO
        cert = engine.certify(g, a)
        assert cert.trace
        assert cert.claimed_uncovered <= a

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [15, 16, 17, 18, 20])
    def test_random_larger(self, n):
        engine = ProductionPackingConstructor()
        rng = random.Random(n)
        for a in range(5):
            for _ in range(3):
                g = random_near_complete(n, n - 4 + a, rng)
                assert_valid(g, a, engine.construct_packing(g, a))


class TestCorollary:

    def _random_phi(self, rng: random.Random):
        r = rng.choice([2, 3, 4])
        edges = list(combinations(range(7), 2))
        weights = {}
        budget = F(3)
        for e in rng.sample(edges, 8):
            phi = F(rng.randint(0, r), r)
            if budget - (1 - phi) < 0:
                continue
            budget -= 1 - phi
            weights[e] = phi
        return WeightedGraph(Graph.complete(7), weights)

    def test_exact_edge_weights(self, engine):
        rng = random.Random(9)
        for _ in range(5):
            wk = self._random_phi(rng)
            packing = engine.corollary_exact_packing(wk)
            loads = packing.edge_weights()
            for u, v in combinations(range(7), 2):
                assert loads.get((u, v), F(0)) == wk.phi(u, v)
            assert packing.max_weight() <= F(1, 2)

    @pytest.mark.slow
    def test_exact_edge_weights_many(self):
        engine = ProductionPackingConstructor()
        rng = random.Random(10)
        for _ in range(100):
            wk = self._random_phi(rng)
            loads = engine.corollary_exact_packing(wk).edge_weights()
            assert all(loads.get(e, F(0)) == wk.phi(*e) for e in combinations(range(7), 2))

    def test_rejects_incomplete_graph(self, engine):
        with pytest.raises(PreconditionError):
            engine.corollary_exact_packing(WeightedGraph(complete_minus(7, [(0, 1)])))

    def test_rejects_excess_missing_weight(self, engine):
        weights = {(0, v): F(0) for v in range(1, 5)}
        with pytest.raises(PreconditionError):
            engine.corollary_exact_packing(WeightedGraph(Graph.complete(7), weights))

    def test_rejects_float_weights(self):
        with pytest.raises(ReductionError):
            WeightedGraph(Graph.complete(7), {(0, 1): 0.25})


class TestCoverIdentity:

    K4_HALVES = {t: F(1, 2) for t in combinations(range(4), 3)}

    def test_exact_cover_passes(self, engine):
        ctx = CaseContext.from_graph(Graph.complete(4), 0)
        engine._check_identity(ctx, FractionalPacking(dict(self.K4_HALVES)), {}, "k4")

    def test_slack_fills_the_gap(self, engine):
        weights = {t: x for t, x in self.K4_HALVES.items() if t != (1, 2, 3)}
        psi = {(1, 2): F(1, 2), (1, 3): F(1, 2), (2, 3): F(1, 2)}
        engine._check_identity(CaseContext.from_graph(Graph.complete(4), 2), FractionalPacking(weights), psi, "k4")
        with pytest.raises(ConstructionError, match="exceeds a"):
            engine._check_identity(CaseContext.from_graph(Graph.complete(4), 1), FractionalPacking(weights), psi, "k4")

    def test_bad_slack_is_reported(self, engine):
        weights = {t: x for t, x in self.K4_HALVES.items() if t != (1, 2, 3)}
        psi = {(1, 2): F(1, 2), (1, 3): F(1, 2)}
        with pytest.raises(ConstructionError, match=r"e=\(2, 3\)"):
            engine._check_identity(CaseContext.from_graph(Graph.complete(4), 4), FractionalPacking(weights), psi, "k4")


class TestSigmaAllocation:

    def test_greedy_by_label(self, engine):
        sigma = engine._allocate_sigma({0: 3, 1: 1, 2: 2}, 4)
        assert sigma == {0: 3, 1: 1, 2: 0}

    def test_required_vertices_get_two(self, engine):
        sigma = engine._allocate_sigma({0: 3, 1: 1, 2: 2}, 4, required=(2,))
        assert sigma == {0: 2, 1: 0, 2: 2}

    def test_random_totals(self, engine):
        rng = random.Random(12)
        for _ in range(200):
            r = {u: rng.randint(0, 5) for u in range(rng.randint(1, 8))}
            total = rng.randint(0, sum(r.values()))
            sigma = engine._allocate_sigma(r, total)
            assert sum(sigma.values()) == total
            assert all(0 <= sigma[u] <= r[u] for u in r)

    @pytest.mark.parametrize("r,total,required,match", [
        ({0: 1, 1: 4}, 3, (0,), "r\\(0\\) = 1 < 2"),
        ({0: 2, 1: 2}, 3, (0, 1), "exceeding the total"),
        ({0: 2, 1: 1}, 4, (), "cannot cover"),
    ])
    def test_infeasible_requests(self, engine, r, total, required, match):
        with pytest.raises(ConstructionError, match=match):
            engine._allocate_sigma(r, total, required)

    @pytest.mark.parametrize("a", [0, 2, 4])
    def test_y_budget_matches_non_degree_count(self, engine, a):
        # sum over U of (non-degree - 1 - sigma) = n + m - 8 + 2a - sum sigma
        rng = random.Random(30 + a)
        for _ in range(20):
            g = random_near_complete(14, 10 + a, rng)
            ctx = CaseContext.from_graph(g, a)
            r = {u: ctx.non_degree[u] - 1 for u in ctx.U}
            sigma = engine._allocate_sigma(r, rng.randint(0, sum(r.values())))
            inst = AuxMatchingInstance(
                units=ctx.U,
                tau_u0={u: F(0) for u in ctx.U},
                tau_zeta=F(0),
                tau_u1={u: F(ctx.non_degree[u] - 1 - sigma[u]) for u in ctx.U},
            )
            assert inst.tau_y() == ctx.n + ctx.m - 8 + 2 * a - sum(sigma.values())


def test_construction_error_is_a_runtime_error():
    assert issubclass(ConstructionError, RuntimeError)
