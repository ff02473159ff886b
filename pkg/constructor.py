# constructor.py

import logging
import threading
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction as Frac
from itertools import combinations
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

from graph_core import Edge, Graph, canonical_labeling, graph6_encode
from hamilton import near_hamilton_order
from packing import (
    FractionalPacking,
    PackingCertificate,
    PackingProblem,
    combine,
    edge_key,
    find_packing,
    lift,
    make_certificate,
    symmetric_complete_packing,
    triangle_key,
    uncovered_profile,
    verify_packing,
)
from ratlp import LinearProgram, ProductionLPSolver, solve_lp
from reduction import PaddingMemo, WeightedGraph, pad_to_exact_missing, split_weighted

ONE = Frac(1)
HALF = Frac(1, 2)
ZETA = -1          # the X-side vertex standing for all of Z
MAX_A = 4


class PreconditionError(ValueError):
    """Input outside the range the construction covers; names the failed bound."""


class ConstructionError(RuntimeError):
    """An internal claim failed; the message carries the arithmetic trail."""


# ------------------------------------------------------------------
# DATA MODELS
# ------------------------------------------------------------------

@dataclass
class CaseContext:
    graph: Graph
    a: int
    non_degree: Tuple[int, ...]
    Z: Tuple[int, ...]
    U: Tuple[int, ...]

    @classmethod
    def from_graph(cls, g: Graph, a: int) -> "CaseContext":
        nd = tuple(g.non_degree(u) for u in range(g.n))
        Z = tuple(u for u in range(g.n) if nd[u] == 0)
        U = tuple(u for u in range(g.n) if nd[u] > 0)
        return cls(g, a, nd, Z, U)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return len(self.Z)


@dataclass
class SymmetricProfile:
    gamma: Frac
    alpha_u: Dict[int, Frac]
    beta_e: Dict[Edge, Frac]
    m: int

    @property
    def alpha(self) -> Frac:
        return (self.m - 1) * sum(self.alpha_u.values(), Frac(0))

    @property
    def beta(self) -> Frac:
        return sum(self.beta_e.values(), Frac(0))

    def beta_row(self, u: int) -> Frac:
        return sum((b for e, b in self.beta_e.items() if u in e), Frac(0))

    def total(self) -> Frac:
        return comb(self.m - 1, 2) * self.gamma + self.alpha + self.beta


@dataclass
class SlackAllocation:
    r: Dict[int, int]
    sigma: Dict[int, int]
    rho: Frac = Frac(0)


@dataclass
class AuxMatchingInstance:
    """
    X = {u0 : u in U} + {zeta}, Y = {u1 : u in U}, all X-Y pairs except u0u1.
    Budgets tau_u0, tau_zeta on X and tau_u1 on Y.
    """
    units: Tuple[int, ...]
    tau_u0: Dict[int, Frac]
    tau_zeta: Frac
    tau_u1: Dict[int, Frac]

    def tau_x(self) -> Frac:
        return sum(self.tau_u0.values(), Frac(0)) + self.tau_zeta

    def tau_y(self) -> Frac:
        return sum(self.tau_u1.values(), Frac(0))


@dataclass
class MatchingReport:
    feasible: bool
    nu: Dict[Tuple[int, int], Frac] = field(default_factory=dict)   # (x, u) -> weight of x u1
    violated: Optional[str] = None
    tau_x: Frac = Frac(0)
    tau_y: Frac = Frac(0)

    def into(self, u: int, x: int) -> Frac:
        """Weight on x -> u1, where x is a unit v (meaning v0) or ZETA."""
        return self.nu.get((x, u), Frac(0))


@dataclass
class SymmetricFamily:
    """omega_z for one z0 in Z; every other member is its image under swapping z0 and z."""
    z0: int
    packing: FractionalPacking
    slack: Dict[Edge, Frac]          # psi_z0 on the edges of G - z0
    profile: SymmetricProfile

    def member(self, z: int, n: int) -> Tuple[FractionalPacking, Dict[Edge, Frac]]:
        if z == self.z0:
            return self.packing, self.slack
        perm = list(range(n))
        perm[z], perm[self.z0] = self.z0, z
        return self.packing.relabel(perm), {edge_key(perm[u], perm[v]): x for (u, v), x in self.slack.items()}


# ------------------------------------------------------------------
# PUBLIC API
# ------------------------------------------------------------------

def dispatch_case(ctx: CaseContext) -> int:
    if any(3 * d > ctx.n + ctx.a for d in ctx.non_degree):
        return 1
    if ctx.m <= 3:
        return 2
    if ctx.a < 4:
        return 3
    return 4


def symmetrize(packing: FractionalPacking, zs: Sequence[int]) -> FractionalPacking:
    """
    Average over all permutations of `zs`, computed per orbit: triangles
    with the same vertices outside zs and the same number inside share the
    class mean. Assumes every vertex of zs is joined to everything.
    """
    zset = set(zs)
    sums: Dict[Tuple[Tuple[int, ...], int], Frac] = {}
    for t, x in packing.weights.items():
        outside = tuple(v for v in t if v not in zset)
        key = (outside, 3 - len(outside))
        sums[key] = sums.get(key, Frac(0)) + x

    out: Dict[Tuple[int, int, int], Frac] = {}
    for (outside, k), total in sums.items():
        mean = total / comb(len(zs), k)
        for inside in combinations(sorted(zs), k):
            out[triangle_key(*(outside + inside))] = mean
    return FractionalPacking(out)


def solve_aux_matching(inst: AuxMatchingInstance, solver: Optional[ProductionLPSolver] = None) -> MatchingReport:
    """
    Fractional matching saturating X within the Y budgets, as an LP
    feasibility problem. Hall's condition reduces to tau(Y) >= tau(X) and
    tau(Y - u1) >= tau(u0); a failed check is reported, not raised.
    """
    tau_x, tau_y = inst.tau_x(), inst.tau_y()
    report = MatchingReport(feasible=False, tau_x=tau_x, tau_y=tau_y)
    if any(t < 0 for t in list(inst.tau_u0.values()) + list(inst.tau_u1.values()) + [inst.tau_zeta]):
        report.violated = "negative budget"
        return report
    if tau_y < tau_x:
        report.violated = f"Y: tau(Y)={tau_y} < tau(X)={tau_x}"
        return report
    for u in inst.units:
        if tau_y - inst.tau_u1[u] < inst.tau_u0[u]:
            report.violated = f"Y - {{{u}_1}}: {tau_y - inst.tau_u1[u]} < tau({u}_0)={inst.tau_u0[u]}"
            return report

    xs = [(u, inst.tau_u0[u]) for u in inst.units if inst.tau_u0[u] > 0]
    if inst.tau_zeta > 0:
        xs.append((ZETA, inst.tau_zeta))
    ys = [u for u in inst.units if inst.tau_u1[u] > 0]
    if not xs:
        report.feasible = True
        return report

    variables = [(x, y) for x, _ in xs for y in ys if x != y]
    rows = []
    for x, budget in xs:
        rows.append(([ONE if v[0] == x else Frac(0) for v in variables], "=", budget))
    for y in ys:
        rows.append(([ONE if v[1] == y else Frac(0) for v in variables], "<=", inst.tau_u1[y]))
    lp = LinearProgram(objective=[Frac(0)] * len(variables), constraints=rows)
    sol = solver.solve(lp) if solver is not None else solve_lp(lp)
    if sol.status != "optimal":
        report.violated = f"LP {sol.status}"
        return report

    report.nu = {v: x for v, x in zip(variables, sol.primal) if x}
    report.feasible = all(
        sum((report.into(y, x) for y in inst.units), Frac(0)) == budget for x, budget in xs
    ) and all(
        sum((w for (_, y2), w in report.nu.items() if y2 == y), Frac(0)) <= inst.tau_u1[y] for y in inst.units
    )
    if not report.feasible:
        report.violated = "LP solution does not saturate X"
    return report


class ProductionPackingConstructor:
    """
    FINAL – Inductive triangle packing engine
    Graphs with n <= lp_cutoff go to the LP; larger ones recurse through
    the four cases. Every packing handed back has been verified exactly
    at (a, cap 1/2).
    """

    def __init__(self, lp_cutoff: int = 13, solver: Optional[ProductionLPSolver] = None):
        if lp_cutoff < 10:
            raise ValueError("lp_cutoff below 10 leaves graphs the induction cannot reach")
        self.lp_cutoff = lp_cutoff
        self.solver = solver or ProductionLPSolver()
        self.logger = self._setup_logging()
        self.trace: List[dict] = []
        self._memo: Dict[Tuple[str, int], FractionalPacking] = {}
        self._memo_lock = threading.Lock()
        self._padding = PaddingMemo()

    # ------------------------------------------------------------------
    # PUBLIC API
    # ------------------------------------------------------------------

    def construct_packing(self, g: Graph, a: int) -> FractionalPacking:
        n, k = g.n, g.missing_count
        if not 0 <= a <= MAX_A:
            raise PreconditionError(f"a={a} outside 0..{MAX_A}")
        if n >= 11:
            if k > n - 4 + a:
                raise PreconditionError(f"{k} missing edges exceeds n - 4 + a = {n - 4 + a}")
        elif 7 <= n <= 10:
            if a != 0:
                raise PreconditionError(f"for 7 <= n <= 10 only a = 0 is covered (got a={a})")
            if k > n - 4:
                raise PreconditionError(f"{k} missing edges exceeds n - 4 = {n - 4}")
        else:
            raise PreconditionError(f"n={n} is below 7")

        self.trace = []
        self.logger.info(f"Constructing packing: n={n}, missing={k}, a={a}")
        packing = self._construct(g, a, 0)
        self.logger.info(f"Packing verified: {len(packing.weights)} triangles, {len(self.trace)} trace entries")
        return packing

    def certify(self, g: Graph, a: int) -> PackingCertificate:
        packing = self.construct_packing(g, a)
        p = PackingProblem(g, target_uncovered=Frac(a))
        return make_certificate(
            p, packing, verify_packing(p, packing).uncovered,
            provenance="inductive construction", trace=self.trace
        )

    def make_symmetric_family(self, ctx: CaseContext, depth: int = 0) -> SymmetricFamily:
        """Case 3 family: omega_z with uncovered exactly a + 1, symmetric on Z - z."""
        g, a = ctx.graph, ctx.a
        z0 = ctx.Z[0]
        zp = [z for z in ctx.Z if z != z0]
        rest, mapping = g.remove_vertices([z0])
        inner = lift(self._construct(rest, a + 1, depth + 1), mapping)

        edges = rest.edge_count
        covered = 3 * inner.total()
        target = Frac(a + 1)
        if edges - covered < target:
            # scale down so that exactly a + 1 stays uncovered
            inner = inner.scaled((edges - target) / covered)
        packing = symmetrize(inner, zp)

        loads = packing.edge_weights()
        phi, slack = {}, {}
        for u, v in g.edges():
            if z0 in (u, v):
                continue
            free = ONE - loads.get((u, v), Frac(0))
            phi[(u, v)] = free / (a + 1)
            slack[(u, v)] = free * a / (a + 1)

        profile = self._profile(ctx, phi, zp)
        if profile.total() != 1:
            raise ConstructionError(f"profile identity fails: C(m-1,2)*gamma + alpha + beta = {profile.total()} != 1")
        return SymmetricFamily(z0, packing, slack, profile)

    def case1(self, ctx: CaseContext, u: int, depth: int = 0) -> FractionalPacking:
        g, a, n = ctx.graph, ctx.a, ctx.n
        nbrs = g.neighbors(u)
        d = len(nbrs)
        rest, mapping = g.remove_vertices([u])
        index = {old: new for new, old in enumerate(mapping)}

        if d <= 1 or (d == 2 and a >= 2):
            # G - u has at most a - 1 <= 3 missing edges: decompose it
            self._record(depth, n, a, "case1-degenerate", d=d)
            return lift(self._construct(rest, 0, depth + 1), mapping)

        sub, sub_map = g.induced(nbrs)
        order, alpha = near_hamilton_order(sub, a)
        if d == 2:
            pairs = [(order[0], order[1])]
        else:
            pairs = [(order[i], order[(i + 1) % d]) for i in range(d)]
        fan = [(sub_map[x], sub_map[y]) for x, y in pairs if sub.has_edge(x, y)]
        self._record(depth, n, a, "case1", d=d, defects=alpha)

        fan_packing = FractionalPacking({triangle_key(u, x, y): HALF for x, y in fan})
        wg = WeightedGraph(rest, {edge_key(index[x], index[y]): HALF for x, y in fan})
        budget = a - alpha
        if wg.missing_weight > (n - 1) - 4 + budget:
            raise ConstructionError(
                f"case 1 residual missing weight {wg.missing_weight} > (n-1) - 4 + (a - alpha) = {n - 5 + budget}"
            )
        inner = self._solve_weighted(wg, budget, depth + 1)
        return combine([(ONE, fan_packing), (ONE, lift(inner, mapping))])

    def case2(self, ctx: CaseContext, depth: int = 0) -> FractionalPacking:
        g, a, n, m = ctx.graph, ctx.a, ctx.n, ctx.m
        nd = ctx.non_degree
        K = [u for u in ctx.U if nd[u] >= 3]
        L = [u for u in ctx.U if nd[u] == 2]
        if 2 * len(K) + len(L) < m + 3:
            raise ConstructionError(f"2k + l = {2 * len(K) + len(L)} < m + 3 = {m + 3} (n={n}, a={a})")

        first, second = self._case2_matchings(ctx, K, L)
        d1 = {u: sum(1 for p in first.values() if p == u) for u in ctx.U}
        d2 = {u: sum(1 for p in second.values() if p == u) for u in ctx.U}
        r = {u: min(a, nd[u] - 1 - d1[u] - d2[u]) for u in ctx.U}
        if any(x < 0 for x in r.values()) or sum(r.values()) < 2 * a:
            raise ConstructionError(f"case 2 slack: sum r = {sum(r.values())} < 2a = {2 * a}, r = {r}")
        self._record(depth, n, a, "case2", m=m, k=len(K), l=len(L))

        parts = []
        for u in ctx.U:
            removed = [u] + [z for z, p in first.items() if p == u]
            sub, mapping = g.remove_vertices(removed)
            index = {old: new for new, old in enumerate(mapping)}
            for z, p in second.items():
                if p == u:
                    sub = sub.without_edge(index[first[z]], index[z])
            parts.append((Frac(1, len(ctx.U) - 2), lift(self._construct(sub, a - r[u], depth + 1), mapping)))
        return combine(parts)

    def case3(self, ctx: CaseContext, depth: int = 0) -> FractionalPacking:
        g, a, n, m = ctx.graph, ctx.a, ctx.n, ctx.m
        family = self.make_symmetric_family(ctx, depth)
        members = [family.member(z, n) for z in ctx.Z]
        profile = family.profile

        if m >= n - 7:
            self._record(depth, n, a, "case3-second", m=m)
            omega, psi = self._second_approach(ctx, members, profile)
        else:
            r = {u: min(ctx.non_degree[u] - 1, a) for u in ctx.U}
            alloc = SlackAllocation(r, self._allocate_sigma(r, 2 * a))
            self._record(depth, n, a, "case3-first", m=m)
            omega, psi = self._first_approach(ctx, members, profile, alloc, depth)
        self._check_identity(ctx, omega, psi, "case 3")
        return omega

    def case4(self, ctx: CaseContext, depth: int = 0) -> FractionalPacking:
        g, a, n, m = ctx.graph, ctx.a, ctx.n, ctx.m
        x, y = g.non_edges()[0]
        z0 = ctx.Z[0]
        zp = [z for z in ctx.Z if z != z0]

        rest, mapping = g.remove_vertices([z0])
        index = {old: new for new, old in enumerate(mapping)}
        boosted = rest.with_edge(index[x], index[y])
        full = symmetrize(lift(self._construct(boosted, a, depth + 1), mapping), zp)

        loads = full.edge_weights()
        through_xy = {t: w for t, w in full.weights.items() if x in t and y in t}
        packing = FractionalPacking({t: w for t, w in full.weights.items() if t not in through_xy})
        phi: Dict[Edge, Frac] = {}
        for t, w in through_xy.items():
            v = next(c for c in t if c not in (x, y))
            phi[edge_key(v, x)] = phi.get(edge_key(v, x), Frac(0)) + w
            phi[edge_key(v, y)] = phi.get(edge_key(v, y), Frac(0)) + w
        slack = {
            (u, v): ONE - loads.get((u, v), Frac(0))
            for u, v in g.edges() if z0 not in (u, v)
        }

        profile = self._profile(ctx, phi, zp)
        if profile.total() > 2 or any(profile.beta_row(u) > 1 for u in ctx.U):
            raise ConstructionError(
                f"case 4 profile bounds fail: total {profile.total()}, rows {[profile.beta_row(u) for u in ctx.U]}"
            )
        family = SymmetricFamily(z0, packing, slack, profile)
        members = [family.member(z, n) for z in ctx.Z]
        beta = profile.beta

        if 3 * m >= n + 4 - 3 * beta:
            self._record(depth, n, a, "case4-second", m=m, beta=str(beta))
            omega, psi = self._second_approach(ctx, members, profile)
        else:
            r = {u: min(a, ctx.non_degree[u] - 1) for u in ctx.U}
            rho = Frac(0) if 3 * m <= n - 8 or beta == 0 else min(Frac(6), m * beta)
            extra = -(-rho.numerator // rho.denominator)
            required = []
            if rho == 6:
                required = [u for u in ctx.U if 3 * ctx.non_degree[u] >= n + a - 6]
            alloc = SlackAllocation(r, self._allocate_sigma(r, 2 * a + extra, required), rho)
            self._record(depth, n, a, "case4-first", m=m, beta=str(beta), rho=str(rho))
            omega, psi = self._first_approach(ctx, members, profile, alloc, depth)
        self._check_identity(ctx, omega, psi, "case 4")
        return omega

    def corollary_exact_packing(self, wk: WeightedGraph) -> FractionalPacking:
        """Packing of complete K_n with omega(e) = phi(e) on every edge."""
        g = wk.graph
        n = g.n
        if g.missing_count:
            raise PreconditionError("the weighted graph must be complete")
        if n < 7:
            raise PreconditionError(f"n={n} is below 7")
        if wk.missing_weight > n - 4:
            raise PreconditionError(f"missing weight {wk.missing_weight} exceeds n - 4 = {n - 4}")
        r = wk.common_denominator
        parts = [(Frac(1, r), self.construct_packing(h, 0)) for h in split_weighted(wk, r, n - 4)]
        packing = combine(parts)
        loads = packing.edge_weights()
        for u, v in g.edges():
            if loads.get((u, v), Frac(0)) != wk.phi(u, v):
                raise ConstructionError(f"edge {(u, v)} carries {loads.get((u, v), 0)} != phi = {wk.phi(u, v)}")
        return packing

    # ------------------------------------------------------------------
    # RECURSION
    # ------------------------------------------------------------------

    def _construct(self, g: Graph, a: int, depth: int) -> FractionalPacking:
        n, k = g.n, g.missing_count
        if k > n - 4 + a:
            raise ConstructionError(f"subproblem n={n} has {k} > n - 4 + a = {n - 4 + a} missing edges")
        if k == 0 and n >= 4:
            self._record(depth, n, a, "complete")
            return symmetric_complete_packing(n)
        if n > self.lp_cutoff and k < n - 4:
            self._record(depth, n, a, "padding", missing=k)
            return pad_to_exact_missing(
                g, n - 4, 0, lambda h, _: self._construct(h, 0, depth + 1), memo=self._padding
            )

        target = a if n <= self.lp_cutoff else k - (n - 4)
        canonical, perm = canonical_labeling(g)
        key = (graph6_encode(canonical), target)
        with self._memo_lock:
            cached = self._memo.get(key)
        if cached is None:
            cached = self._solve_canonical(canonical, target, depth)
            with self._memo_lock:
                self._memo.setdefault(key, cached)
        else:
            self._record(depth, n, target, "memo")

        inverse = [0] * n
        for old, new in enumerate(perm):
            inverse[new] = old
        return cached.relabel(inverse)

    def _solve_canonical(self, g: Graph, a: int, depth: int) -> FractionalPacking:
        n = g.n
        p = PackingProblem(g, target_uncovered=Frac(a))
        if n <= self.lp_cutoff:
            self._record(depth, n, a, "lp")
            packing = find_packing(p, self.solver)
            if packing is None:
                raise ConstructionError(f"LP base case n={n}: no packing with uncovered <= {a}")
            return packing

        ctx = CaseContext.from_graph(g, a)
        case = dispatch_case(ctx)
        self.logger.debug(f"depth {depth}: n={n} a={a} m={ctx.m} -> case {case}")
        if case == 1:
            u = max(range(n), key=lambda v: (ctx.non_degree[v], -v))
            packing = self.case1(ctx, u, depth)
        elif case == 2:
            packing = self.case2(ctx, depth)
        elif case == 3:
            packing = self.case3(ctx, depth)
        else:
            packing = self.case4(ctx, depth)

        report = verify_packing(p, packing)
        if not report.passed:
            raise ConstructionError(f"case {case} output fails verification at n={n}, a={a}: {report.problems[:5]}")
        return packing

    def _solve_weighted(self, wg: WeightedGraph, a: int, depth: int) -> FractionalPacking:
        if not wg.weights:
            return self._construct(wg.graph, a, depth)
        n = wg.graph.n
        limit = n - 4 + a
        if wg.missing_weight > limit:
            raise ConstructionError(f"weighted subproblem n={n}: missing weight {wg.missing_weight} > {limit}")

        r = wg.common_denominator
        if n > self.lp_cutoff:
            # identical split graphs are constructed once and weighted by multiplicity
            parts = Counter(split_weighted(wg, r, limit))
            self._record(depth, n, a, "split", r=r, distinct=len(parts))
            packing = combine(
                (Frac(count, r), self._construct(h, a, depth + 1)) for h, count in sorted(parts.items(), key=lambda kv: kv[0].rows)
            )
        else:
            self._record(depth, n, a, "weighted-lp", r=r)
            packing = find_packing(wg.problem(Frac(a)), self.solver)
            if packing is None:
                raise ConstructionError(f"weighted LP n={n}: no packing with uncovered <= {a}")

        report = verify_packing(wg.problem(Frac(a)), packing)
        if not report.passed:
            raise ConstructionError(f"weighted subproblem n={n}, a={a} fails verification: {report.problems[:5]}")
        return packing

    # ------------------------------------------------------------------
    # CASE 3 / 4 COMBINATIONS
    # ------------------------------------------------------------------

    def _first_approach(
        self,
        ctx: CaseContext,
        members: List[Tuple[FractionalPacking, Dict[Edge, Frac]]],
        profile: SymmetricProfile,
        alloc: SlackAllocation,
        depth: int
    ) -> Tuple[FractionalPacking, Dict[Edge, Frac]]:
        g, a, n, m = ctx.graph, ctx.a, ctx.n, ctx.m
        beta, rho = profile.beta, alloc.rho
        keep = ONE - rho / (beta * m) if beta else ONE

        inst = AuxMatchingInstance(
            units=ctx.U,
            tau_u0={u: m * keep * profile.beta_row(u) for u in ctx.U},
            tau_zeta=Frac(m, 2) * profile.alpha,
            tau_u1={u: Frac(ctx.non_degree[u] - 1 - alloc.sigma[u]) for u in ctx.U},
        )
        if inst.tau_y() != n + m - 8 + 2 * a - sum(alloc.sigma.values()):
            raise ConstructionError(f"tau(Y) = {inst.tau_y()} disagrees with the non-degree count")
        report = solve_aux_matching(inst, self.solver)
        if not report.feasible:
            raise ConstructionError(
                f"no saturating matching (n={n}, m={m}, a={a}): {report.violated}; "
                f"tau(X)={report.tau_x}, tau(Y)={report.tau_y}, sigma={alloc.sigma}, rho={rho}"
            )

        omegas = [w for w, _ in members]
        psi: Dict[Edge, Frac] = {}
        for _, s in members:
            _accumulate(psi, s)

        pair_count = comb(m, 2)
        for u in ctx.U:
            weights: Dict[Edge, Frac] = {}
            for v in ctx.U:
                taken = report.into(u, v) if v != u else Frac(0)
                if taken:
                    for z in ctx.Z:
                        weights[edge_key(v, z)] = ONE - taken / m
            taken = report.into(u, ZETA)
            if taken:
                for z, w in combinations(ctx.Z, 2):
                    weights[(z, w)] = ONE - taken / pair_count
            rest, mapping = g.remove_vertices([u])
            index = {old: new for new, old in enumerate(mapping)}
            wg = WeightedGraph(rest, {edge_key(index[p], index[q]): x for (p, q), x in weights.items()})
            inner = self._solve_weighted(wg, a - alloc.sigma[u], depth + 1)
            omegas.append(lift(inner, mapping))
            _accumulate(psi, {
                edge_key(mapping[p], mapping[q]): x
                for (p, q), x in uncovered_profile(wg.problem(), inner).items()
            })

        prime: Dict[Tuple[int, int, int], Frac] = {}
        for (u, v), b in profile.beta_e.items():
            if b:
                for z in ctx.Z:
                    prime[triangle_key(u, v, z)] = keep * b
        for u in ctx.U:
            if profile.alpha_u[u]:
                for z, w in combinations(ctx.Z, 2):
                    prime[triangle_key(u, z, w)] = profile.alpha_u[u]
        if profile.gamma:
            for t in combinations(ctx.Z, 3):
                prime[t] = profile.gamma
        omegas.append(FractionalPacking(prime))
        if rho and beta:
            _accumulate(psi, {e: rho * b / beta for e, b in profile.beta_e.items()})

        scale = Frac(1, n - 2)
        omega = combine((scale, w) for w in omegas)
        return omega, {e: x * scale for e, x in psi.items()}

    def _second_approach(
        self,
        ctx: CaseContext,
        members: List[Tuple[FractionalPacking, Dict[Edge, Frac]]],
        profile: SymmetricProfile
    ) -> Tuple[FractionalPacking, Dict[Edge, Frac]]:
        n, m = ctx.n, ctx.m
        alpha, beta, gamma = profile.alpha, profile.beta, profile.gamma

        prime: Dict[Tuple[int, int, int], Frac] = {}
        for (u, v), b in profile.beta_e.items():
            if b:
                for z in ctx.Z:
                    prime[triangle_key(u, v, z)] = b
        for u in ctx.U:
            w_uzz = (1 + (m - 1) * profile.alpha_u[u] - profile.beta_row(u)) / (m - 1)
            if w_uzz < 0:
                raise ConstructionError(f"negative weight {w_uzz} on triangles through {u} and two Z vertices")
            if w_uzz:
                for z, w in combinations(ctx.Z, 2):
                    prime[triangle_key(u, z, w)] = w_uzz
        w_zzz = (2 + (m - 2) * gamma - Frac(n - m, m - 1) - alpha / (m - 1) + 2 * beta / (m - 1)) / (m - 2)
        if w_zzz < 0:
            raise ConstructionError(f"negative weight {w_zzz} on triangles inside Z (n={n}, m={m}, beta={beta})")
        if w_zzz:
            for t in combinations(ctx.Z, 3):
                prime[t] = w_zzz

        psi: Dict[Edge, Frac] = {}
        for _, s in members:
            _accumulate(psi, s)
        scale = Frac(1, m)
        omega = combine([(scale, w) for w, _ in members] + [(scale, FractionalPacking(prime))])
        return omega, {e: x * scale for e, x in psi.items()}

    # ------------------------------------------------------------------
    # INTERNAL HELPERS
    # ------------------------------------------------------------------

    def _case2_matchings(self, ctx: CaseContext, K: List[int], L: List[int]) -> Tuple[Dict[int, int], Dict[int, int]]:
        """
        Two edge-disjoint matchings Z -> K + L covering Z, every L vertex
        used at most once overall; K partners are tried first.
        """
        candidates = K + L
        lset = set(L)
        zs = list(ctx.Z)
        first: Dict[int, int] = {}
        second: Dict[int, int] = {}

        def used(p: int) -> int:
            return sum(1 for q in first.values() if q == p) + sum(1 for q in second.values() if q == p)

        def place(i: int) -> bool:
            if i == 2 * len(zs):
                return True
            z = zs[i % len(zs)]
            target = first if i < len(zs) else second
            for p in candidates:
                if p in target.values() or (p in lset and used(p)):
                    continue
                if target is second and first[z] == p:
                    continue
                target[z] = p
                if place(i + 1):
                    return True
                del target[z]
            return False

        if zs and not place(0):
            raise ConstructionError(f"no matchings Z -> K + L (m={len(zs)}, k={len(K)}, l={len(L)})")
        return first, second

    def _allocate_sigma(self, r: Dict[int, int], total: int, required: Sequence[int] = ()) -> Dict[int, int]:
        # vertices in `required` get at least 2, the rest fills greedily by label
        sigma = {u: 0 for u in r}
        for u in required:
            if r[u] < 2:
                raise ConstructionError(f"r({u}) = {r[u]} < 2 but sigma({u}) >= 2 is required")
            sigma[u] = 2
        left = total - sum(sigma.values())
        if left < 0:
            raise ConstructionError(f"{len(required)} vertices need sigma >= 2, exceeding the total {total}")
        for u in sorted(r):
            step = min(r[u] - sigma[u], left)
            sigma[u] += step
            left -= step
        if left:
            raise ConstructionError(f"sum r = {sum(r.values())} cannot cover sigma total {total}")
        return sigma

    def _profile(self, ctx: CaseContext, phi: Dict[Edge, Frac], zp: Sequence[int]) -> SymmetricProfile:
        uset = set(ctx.U)
        gamma = phi.get(edge_key(zp[0], zp[1]), Frac(0))
        alpha_u = {u: phi.get(edge_key(u, zp[0]), Frac(0)) for u in ctx.U}
        beta_e = {
            (u, v): phi.get((u, v), Frac(0))
            for u, v in ctx.graph.edges() if u in uset and v in uset
        }
        return SymmetricProfile(gamma, alpha_u, beta_e, ctx.m)

    def _check_identity(self, ctx: CaseContext, omega: FractionalPacking, psi: Dict[Edge, Frac], label: str):
        loads = omega.edge_weights()
        for e in ctx.graph.edges():
            total = loads.get(e, Frac(0)) + psi.get(e, Frac(0))
            if total != 1:
                raise ConstructionError(
                    f"{label}: omega(e) + psi(e) = {total} != 1 at e={e} "
                    f"(omega={loads.get(e, 0)}, psi={psi.get(e, 0)}, n={ctx.n}, m={ctx.m}, a={ctx.a})"
                )
        slack = sum(psi.values(), Frac(0))
        if slack > ctx.a:
            raise ConstructionError(f"{label}: total psi {slack} exceeds a = {ctx.a}")

    def _record(self, depth: int, n: int, a: int, route: str, **detail):
        entry = {"depth": depth, "n": n, "a": a, "route": route}
        entry.update(detail)
        self.trace.append(entry)
        self.logger.debug(f"{'  ' * depth}{route} n={n} a={a} {detail if detail else ''}")

    def _setup_logging(self):
        logger = logging.getLogger("PackingConstructor")
        if not logger.handlers:
            handler = logging.StreamHandler()
            formatter = logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )
            handler.setFormatter(formatter)
            logger.addHandler(handler)
            logger.setLevel(logging.INFO)
        return logger


# ------------------------------------------------------------------
# MODULE-LEVEL WRAPPERS
# ------------------------------------------------------------------

def construct_packing(g: Graph, a: int, **options) -> FractionalPacking:
    return ProductionPackingConstructor(**options).construct_packing(g, a)


def corollary_exact_packing(wk: WeightedGraph, **options) -> FractionalPacking:
    return ProductionPackingConstructor(**options).corollary_exact_packing(wk)


def _accumulate(target: Dict[Edge, Frac], source: Dict[Edge, Frac]):
    for e, x in source.items():
        if x:
            target[e] = target.get(e, Frac(0)) + x
