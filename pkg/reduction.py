# reduction.py

import threading
from dataclasses import dataclass, field
from fractions import Fraction as Frac
from itertools import combinations
from math import lcm
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from graph_core import Edge, Graph, canonical_labeling, graph6_encode, triangles
from packing import (
    FractionalPacking,
    PackingProblem,
    combine,
    edge_key,
    symmetric_complete_packing,
)

ONE = Frac(1)
THIRD = Frac(1, 3)

Solver = Callable[[Graph, int], FractionalPacking]


class ReductionError(ValueError):
    """A reduction was called outside its preconditions."""


# ------------------------------------------------------------------
# DATA MODELS
# ------------------------------------------------------------------

@dataclass(frozen=True)
class WeightedGraph:
    """
    Graph plus capacities phi on its edges (default 1). Non-edges count
    as phi = 0 in the missing weight.
    """
    graph: Graph
    weights: Mapping[Edge, Frac] = field(default_factory=dict)

    def __post_init__(self):
        normalised = {}
        for (u, v), phi in self.weights.items():
            if not self.graph.has_edge(u, v):
                raise ReductionError(f"weight given for non-edge {(u, v)}")
            if isinstance(phi, float):
                raise ReductionError(f"weight {phi!r} on {(u, v)} is not an exact rational")
            if not 0 <= phi <= 1:
                raise ReductionError(f"weight {phi} on {(u, v)} outside [0, 1]")
            if phi != 1:
                normalised[edge_key(u, v)] = Frac(phi)
        object.__setattr__(self, "weights", normalised)

    @classmethod
    def unweighted(cls, g: Graph) -> "WeightedGraph":
        return cls(g, {})

    def phi(self, u: int, v: int) -> Frac:
        if not self.graph.has_edge(u, v):
            return Frac(0)
        return self.weights.get(edge_key(u, v), ONE)

    @property
    def missing_weight(self) -> Frac:
        return self.graph.missing_count + sum((ONE - w for w in self.weights.values()), Frac(0))

    @property
    def common_denominator(self) -> int:
        return lcm(1, *(w.denominator for w in self.weights.values()))

    def problem(self, target_uncovered: Frac = Frac(0), triangle_cap: Frac = Frac(1, 2)) -> PackingProblem:
        return PackingProblem(
            self.graph,
            capacities=dict(self.weights) or None,
            triangle_cap=triangle_cap,
            target_uncovered=target_uncovered
        )


@dataclass
class DemandPartition:
    demands: Tuple[int, ...]
    r: int
    m: int
    sets: List[FrozenSet[int]]    # sets[j - 1] is S_j

    def multiplicity(self, i: int) -> int:
        return sum(1 for s in self.sets if i in s)


# ------------------------------------------------------------------
# PUBLIC API
# ------------------------------------------------------------------

def partition_demands(d: Sequence[int], r: int, m: int) -> DemandPartition:
    """
    Sets S_1..S_r of size <= m with index i in exactly d[i] of them.
    Greedy on r: sort descending, take the top m positive entries as S_r.
    """
    if r < 0 or m < 0:
        raise ReductionError(f"r={r} and m={m} must be non-negative")
    for i, x in enumerate(d):
        if not 0 <= x <= r:
            raise ReductionError(f"demand d[{i}]={x} outside 0..{r}")
    if sum(d) > r * m:
        raise ReductionError(f"sum of demands {sum(d)} exceeds r*m = {r * m}")

    remaining = list(d)
    sets: List[FrozenSet[int]] = [frozenset()] * r
    for level in range(r, 0, -1):
        order = sorted(range(len(remaining)), key=lambda i: (-remaining[i], i))
        chosen = frozenset(i for i in order[:m] if remaining[i] >= 1)
        for i in chosen:
            remaining[i] -= 1
        sets[level - 1] = chosen

    partition = DemandPartition(tuple(d), r, m, sets)
    # holds by the greedy argument; a failure is an implementation error
    assert all(partition.multiplicity(i) == x for i, x in enumerate(d))
    return partition


def split_weighted(wg: WeightedGraph, r: int, m: int) -> List[Graph]:
    """
    r graphs with at most m non-edges each; pair e is a non-edge of
    exactly (1 - phi(e)) * r of them (non-edges of wg in all of them).
    """
    g = wg.graph
    pairs = list(combinations(range(g.n), 2))
    demands = []
    for u, v in pairs:
        scaled = (ONE - wg.phi(u, v)) * r
        if scaled.denominator != 1:
            raise ReductionError(f"phi{(u, v)} * {r} is not integral; choose r as a common denominator")
        demands.append(int(scaled))

    partition = partition_demands(demands, r, m)
    out = []
    for s in partition.sets:
        rows = [(1 << g.n) - 1 & ~(1 << u) for u in range(g.n)]
        for i in s:
            u, v = pairs[i]
            rows[u] &= ~(1 << v)
            rows[v] &= ~(1 << u)
        out.append(Graph(g.n, tuple(rows)))
    return out


def average_split(wg: WeightedGraph, r: int, m: int, solve: Callable[[Graph], FractionalPacking]) -> FractionalPacking:
    """Packing of (G, phi) as the 1/r average of packings of the split graphs."""
    parts = [(Frac(1, r), solve(h)) for h in split_weighted(wg, r, m)]
    return combine(parts)


class PaddingMemo:
    """Canonical-form keyed results; concurrent inserts of the same key are idempotent."""

    def __init__(self):
        self._lock = threading.Lock()
        self._store: Dict[tuple, FractionalPacking] = {}

    def get(self, key: tuple) -> Optional[FractionalPacking]:
        with self._lock:
            return self._store.get(key)

    def put(self, key: tuple, packing: FractionalPacking):
        with self._lock:
            self._store.setdefault(key, packing)

    def __len__(self):
        with self._lock:
            return len(self._store)


def pad_to_exact_missing(
    g: Graph,
    target_missing: int,
    a: int,
    solver: Solver,
    cap: Frac = Frac(1, 2),
    memo: Optional[PaddingMemo] = None
) -> FractionalPacking:
    """
    Packing of g from solver outputs on graphs with exactly target_missing
    missing edges: pick a triangle uvw, average the packings of g-uv, g-uw,
    g-vw, and add 1/3 on uvw.
    """
    if cap < THIRD:
        raise ReductionError(f"triangle cap {cap} is below 1/3")
    if g.edge_count == 0:
        raise ReductionError("padding needs a graph with at least one edge")
    return _pad(g, target_missing, a, solver, cap, memo if memo is not None else PaddingMemo())


# ------------------------------------------------------------------
# INTERNAL HELPERS
# ------------------------------------------------------------------

def _pad(g: Graph, target: int, a: int, solver: Solver, cap: Frac, memo: PaddingMemo) -> FractionalPacking:
    k = g.missing_count
    if k > target:
        raise ReductionError(f"graph already has {k} > {target} missing edges")
    if k == target:
        return solver(g, a)
    if k == 0 and g.n >= 3 and Frac(1, g.n - 2) <= cap:
        return symmetric_complete_packing(g.n, cap)

    canonical, perm = canonical_labeling(g)
    key = (graph6_encode(canonical), target, a, cap)
    packing = memo.get(key)
    if packing is None:
        found = triangles(canonical)
        if not found:
            raise ReductionError(
                f"no triangle in a graph with {k} missing edges; padding towards {target} is impossible"
            )
        u, v, w = found[0]
        parts = [
            (THIRD, _pad(canonical.without_edge(x, y), target, a, solver, cap, memo))
            for x, y in ((u, v), (u, w), (v, w))
        ]
        parts.append((THIRD, FractionalPacking({(u, v, w): ONE})))
        packing = combine(parts)
        memo.put(key, packing)

    inverse = [0] * g.n
    for old, new in enumerate(perm):
        inverse[new] = old
    return packing.relabel(inverse)
