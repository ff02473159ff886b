# packing.py

import json
from dataclasses import dataclass, field
from fractions import Fraction as Frac
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from graph_core import Edge, Graph, Triangle, canonical_labeling, graph6_decode, graph6_encode, triangles
from ratlp import LinearProgram, ProductionLPSolver, solve_lp, verify_solution

ONE = Frac(1)
HALF = Frac(1, 2)


def edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def triangle_key(u: int, v: int, w: int) -> Triangle:
    return tuple(sorted((u, v, w)))


# ------------------------------------------------------------------
# DATA MODELS
# ------------------------------------------------------------------

@dataclass(frozen=True)
class PackingProblem:
    """
    Capacities default to 1 on every edge; entries for non-edges are
    rejected. triangle_cap is the heavy-triangle bound.
    """
    graph: Graph
    capacities: Optional[Mapping[Edge, Frac]] = None
    triangle_cap: Frac = HALF
    target_uncovered: Frac = Frac(0)

    def __post_init__(self):
        if not Frac(1, 3) <= self.triangle_cap <= 1:
            raise ValueError(f"triangle cap {self.triangle_cap} outside [1/3, 1]")
        if self.capacities is not None:
            normalised = {}
            for (u, v), phi in self.capacities.items():
                if not self.graph.has_edge(u, v):
                    raise ValueError(f"capacity given for non-edge {(u, v)}")
                if not 0 <= phi <= 1:
                    raise ValueError(f"capacity {phi} on {(u, v)} outside [0, 1]")
                normalised[edge_key(u, v)] = Frac(phi)
            object.__setattr__(self, "capacities", normalised)

    def capacity(self, u: int, v: int) -> Frac:
        if self.capacities is None:
            return ONE
        return self.capacities.get(edge_key(u, v), ONE)

    def total_capacity(self) -> Frac:
        return sum((self.capacity(u, v) for u, v in self.graph.edges()), Frac(0))


@dataclass
class FractionalPacking:
    """Sparse triangle -> weight map; triangles are sorted triples, zeros dropped."""
    weights: Dict[Triangle, Frac] = field(default_factory=dict)

    def __post_init__(self):
        cleaned: Dict[Triangle, Frac] = {}
        for t, w in self.weights.items():
            if w:
                key = triangle_key(*t)
                cleaned[key] = cleaned.get(key, Frac(0)) + Frac(w)
        self.weights = {t: w for t, w in cleaned.items() if w}

    def edge_weights(self) -> Dict[Edge, Frac]:
        out: Dict[Edge, Frac] = {}
        for (u, v, w), x in self.weights.items():
            for e in ((u, v), (u, w), (v, w)):
                out[e] = out.get(e, Frac(0)) + x
        return out

    def edge_weight(self, u: int, v: int) -> Frac:
        e = edge_key(u, v)
        return sum((x for t, x in self.weights.items() if e[0] in t and e[1] in t), Frac(0))

    def max_weight(self) -> Frac:
        return max(self.weights.values(), default=Frac(0))

    def total(self) -> Frac:
        return sum(self.weights.values(), Frac(0))

    def scaled(self, t: Frac) -> "FractionalPacking":
        return FractionalPacking({tri: w * t for tri, w in self.weights.items()})

    def relabel(self, mapping: Sequence[int]) -> "FractionalPacking":
        """mapping[old] = new."""
        return FractionalPacking({
            triangle_key(mapping[u], mapping[v], mapping[w]): x
            for (u, v, w), x in self.weights.items()
        })


@dataclass
class VerificationReport:
    passed: bool
    uncovered: Frac
    max_weight: Frac
    invalid_triangles: List[Triangle] = field(default_factory=list)
    negative_weights: List[Triangle] = field(default_factory=list)
    over_capacity: List[Tuple[Edge, Frac, Frac]] = field(default_factory=list)
    problems: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "uncovered": str(self.uncovered),
            "max_weight": str(self.max_weight),
            "problems": list(self.problems),
        }


@dataclass
class PackingCertificate:
    graph: str                          # canonical graph6
    packing: FractionalPacking
    claimed_uncovered: Frac
    claimed_cap: Frac
    provenance: str = ""
    capacities: Optional[Dict[Edge, Frac]] = None
    trace: List[dict] = field(default_factory=list)

    def problem(self) -> PackingProblem:
        return PackingProblem(
            graph6_decode(self.graph),
            capacities=self.capacities,
            triangle_cap=self.claimed_cap,
            target_uncovered=self.claimed_uncovered
        )


# ------------------------------------------------------------------
# PUBLIC API
# ------------------------------------------------------------------

def packing_lp(p: PackingProblem) -> Tuple[LinearProgram, List[Triangle]]:
    """
    Variables are the triangles whose three edges have positive capacity;
    objective is the uncovered weight (constant total capacity minus 3 per
    unit of triangle weight).
    """
    g = p.graph
    support = [
        t for t in triangles(g)
        if p.capacity(t[0], t[1]) and p.capacity(t[0], t[2]) and p.capacity(t[1], t[2])
    ]
    index_by_edge: Dict[Edge, List[int]] = {}
    for k, (u, v, w) in enumerate(support):
        for e in ((u, v), (u, w), (v, w)):
            index_by_edge.setdefault(e, []).append(k)

    rows = []
    for e in sorted(index_by_edge):
        coeffs = [Frac(0)] * len(support)
        for k in index_by_edge[e]:
            coeffs[k] = ONE
        rows.append((coeffs, "<=", p.capacity(*e)))

    lp = LinearProgram(
        objective=[Frac(-3)] * len(support),
        constraints=rows,
        bounds=[(Frac(0), p.triangle_cap)] * len(support),
        constant=p.total_capacity()
    )
    return lp, support


def min_uncovered(
    p: PackingProblem,
    solver: Optional[ProductionLPSolver] = None
) -> Tuple[Frac, FractionalPacking]:
    """Exact minimum uncovered weight and a packing attaining it."""
    lp, support = packing_lp(p)
    if not support:
        return p.total_capacity(), FractionalPacking()
    sol = solver.solve(lp) if solver is not None else solve_lp(lp)
    if sol.status != "optimal" or not verify_solution(lp, sol):
        raise RuntimeError(f"packing LP did not certify (status {sol.status})")
    packing = FractionalPacking(dict(zip(support, sol.primal)))
    return sol.objective_value, packing


def find_packing(
    p: PackingProblem,
    solver: Optional[ProductionLPSolver] = None
) -> Optional[FractionalPacking]:
    """
    Any packing meeting p.target_uncovered and p.triangle_cap, or None.
    The float route is accepted on exact verification alone; the exact
    optimum is the fallback.
    """
    lp, support = packing_lp(p)
    if not support:
        return FractionalPacking() if p.total_capacity() <= p.target_uncovered else None
    if solver is not None:
        primal = solver.solve_primal(lp)
        if primal is not None:
            candidate = FractionalPacking(dict(zip(support, primal)))
            if verify_packing(p, candidate).passed:
                return candidate
    value, packing = min_uncovered(p, solver)
    return packing if value <= p.target_uncovered else None


def verify_packing(p: PackingProblem, packing: FractionalPacking) -> VerificationReport:
    g = p.graph
    report = VerificationReport(passed=False, uncovered=Frac(0), max_weight=Frac(0))
    loads: Dict[Edge, Frac] = {}

    for t, x in sorted(packing.weights.items()):
        u, v, w = t
        if len({u, v, w}) != 3 or not all(0 <= z < g.n for z in t):
            report.invalid_triangles.append(t)
            report.problems.append(f"triangle {t} is not a vertex triple of the graph")
            continue
        if not (g.has_edge(u, v) and g.has_edge(u, w) and g.has_edge(v, w)):
            report.invalid_triangles.append(t)
            report.problems.append(f"triangle {t} is not a triangle of the graph")
            continue
        if x < 0:
            report.negative_weights.append(t)
            report.problems.append(f"triangle {t} has negative weight {x}")
        for e in ((u, v), (u, w), (v, w)):
            loads[e] = loads.get(e, Frac(0)) + x
        if x > report.max_weight:
            report.max_weight = x

    uncovered = Frac(0)
    for u, v in g.edges():
        phi = p.capacity(u, v)
        load = loads.get((u, v), Frac(0))
        if load > phi:
            report.over_capacity.append(((u, v), load, phi))
            report.problems.append(f"edge {(u, v)} carries {load} > capacity {phi}")
        uncovered += phi - load
    report.uncovered = uncovered

    if report.max_weight > p.triangle_cap:
        report.problems.append(f"max triangle weight {report.max_weight} exceeds cap {p.triangle_cap}")
    if uncovered > p.target_uncovered:
        report.problems.append(f"uncovered weight {uncovered} exceeds target {p.target_uncovered}")
    report.passed = not report.problems
    return report


def uncovered_profile(p: PackingProblem, packing: FractionalPacking) -> Dict[Edge, Frac]:
    """Per-edge slack phi(e) - omega(e) over the edges of the graph."""
    loads = packing.edge_weights()
    return {(u, v): p.capacity(u, v) - loads.get((u, v), Frac(0)) for u, v in p.graph.edges()}


def symmetric_complete_packing(n: int, cap: Frac = HALF) -> FractionalPacking:
    """Weight 1/(n-2) on every triangle of K_n."""
    if n < 3:
        raise ValueError("K_n has no triangles for n < 3")
    weight = Frac(1, n - 2)
    if weight > cap:
        raise ValueError(f"uniform weight {weight} exceeds the triangle cap {cap} for n={n}")
    return FractionalPacking({t: weight for t in triangles(Graph.complete(n))})


def combine(packings: Iterable[Tuple[Frac, FractionalPacking]]) -> FractionalPacking:
    out: Dict[Triangle, Frac] = {}
    for coefficient, packing in packings:
        if coefficient < 0:
            raise ValueError(f"negative combination coefficient {coefficient}")
        if not coefficient:
            continue
        for t, x in packing.weights.items():
            out[t] = out.get(t, Frac(0)) + coefficient * x
    return FractionalPacking(out)


def lift(packing: FractionalPacking, mapping: Sequence[int]) -> FractionalPacking:
    """Relabel a packing of an induced subgraph back to host labels (mapping[new] = old)."""
    return packing.relabel(mapping)


def restrict(packing: FractionalPacking, vertices: Sequence[int]) -> FractionalPacking:
    """Triangles inside `vertices`, relabelled to their positions in that list."""
    index = {v: i for i, v in enumerate(vertices)}
    return FractionalPacking({
        triangle_key(index[u], index[v], index[w]): x
        for (u, v, w), x in packing.weights.items()
        if u in index and v in index and w in index
    })


# ------------------------------------------------------------------
# CERTIFICATES
# ------------------------------------------------------------------

def make_certificate(
    p: PackingProblem,
    packing: FractionalPacking,
    claimed_uncovered: Frac,
    provenance: str = "",
    trace: Optional[List[dict]] = None
) -> PackingCertificate:
    """Relabels graph, capacities and packing to the canonical labelling."""
    canonical, perm = canonical_labeling(p.graph)
    capacities = None
    if p.capacities is not None:
        capacities = {edge_key(perm[u], perm[v]): phi for (u, v), phi in p.capacities.items() if phi != 1}
        capacities = capacities or None
    return PackingCertificate(
        graph=graph6_encode(canonical),
        packing=packing.relabel(perm),
        claimed_uncovered=claimed_uncovered,
        claimed_cap=p.triangle_cap,
        provenance=provenance,
        capacities=capacities,
        trace=list(trace or [])
    )


def verify_certificate(
    cert: PackingCertificate,
    graph: Optional[Graph] = None,
    a: Optional[Frac] = None,
    beta: Optional[Frac] = None
) -> VerificationReport:
    """
    Re-checks the stored packing against its own claims, and against an
    external graph / bound / cap when given.
    """
    p = cert.problem()
    target = cert.claimed_uncovered if a is None else min(cert.claimed_uncovered, Frac(a))
    cap = cert.claimed_cap if beta is None else min(cert.claimed_cap, Frac(beta))
    report = verify_packing(
        PackingProblem(p.graph, p.capacities, triangle_cap=cap, target_uncovered=target),
        cert.packing
    )
    if graph is not None and graph6_encode(canonical_labeling(graph)[0]) != cert.graph:
        report.problems.append("certificate graph is not isomorphic to the supplied graph")
        report.passed = False
    return report


def certificate_to_json(cert: PackingCertificate) -> dict:
    doc = {
        "graph": cert.graph,
        "beta": str(cert.claimed_cap),
        "uncovered": str(cert.claimed_uncovered),
        "triangles": [[u, v, w, str(x)] for (u, v, w), x in sorted(cert.packing.weights.items())],
    }
    if cert.capacities:
        doc["capacities"] = [[u, v, str(phi)] for (u, v), phi in sorted(cert.capacities.items())]
    if cert.provenance:
        doc["provenance"] = cert.provenance
    if cert.trace:
        doc["trace"] = cert.trace
    return doc


def certificate_from_json(doc: dict) -> PackingCertificate:
    try:
        weights = _unique_entries(
            ((triangle_key(int(u), int(v), int(w)), Frac(x)) for u, v, w, x in doc["triangles"]), "triangle"
        )
        capacities = None
        if doc.get("capacities"):
            capacities = _unique_entries(
                ((edge_key(int(u), int(v)), Frac(phi)) for u, v, phi in doc["capacities"]), "capacity edge"
            )
        return PackingCertificate(
            graph=doc["graph"],
            packing=FractionalPacking(weights),
            claimed_uncovered=Frac(doc["uncovered"]),
            claimed_cap=Frac(doc["beta"]),
            provenance=doc.get("provenance", ""),
            capacities=capacities,
            trace=list(doc.get("trace", []))
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise ValueError(f"malformed certificate: {e}") from e


def _unique_entries(entries, what: str) -> dict:
    # a repeated key would otherwise silently keep only the last weight
    out = {}
    for key, value in entries:
        if key in out:
            raise ValueError(f"{what} {key} listed twice")
        out[key] = value
    return out


def write_certificate(cert: PackingCertificate, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(certificate_to_json(cert), f, indent=2)
        f.write("\n")
    return path


def read_certificate(path) -> PackingCertificate:
    with open(path, "r", encoding="utf-8") as f:
        return certificate_from_json(json.load(f))
