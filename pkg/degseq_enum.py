# degseq_enum.py

import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations, product
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple

from joblib import Parallel, delayed
from tqdm import tqdm

from graph_core import DegreeSequence, Graph, canonical_key, complement, graph6_decode, graph6_encode, is_graphical

RULE_COMPLEMENT = "complement"
RULE_LEAF_BATCH = "leaf-batch"
RULE_VERTEX_ADD = "vertex-add"

EMPTY: DegreeSequence = ()


# ------------------------------------------------------------------
# DATA MODELS
# ------------------------------------------------------------------

@dataclass
class DegSeqNode:
    sequence: DegreeSequence
    in_edges: List[Tuple[DegreeSequence, str]] = field(default_factory=list)
    out_edges: List[DegreeSequence] = field(default_factory=list)

    @property
    def rule(self) -> Optional[str]:
        return self.in_edges[0][1] if self.in_edges else None


@dataclass
class DegSeqDag:
    nodes: Dict[DegreeSequence, DegSeqNode]
    sinks: List[DegreeSequence]

    def levels(self) -> List[List[DegreeSequence]]:
        """Topological wavefronts: a node's level is its longest path from the source."""
        depth: Dict[DegreeSequence, int] = {}

        def level_of(seq: DegreeSequence) -> int:
            if seq not in depth:
                preds = self.nodes[seq].in_edges
                depth[seq] = 1 + max(level_of(p) for p, _ in preds) if preds else 0
            return depth[seq]

        for seq in self.nodes:
            level_of(seq)
        waves: Dict[int, List[DegreeSequence]] = {}
        for seq, k in depth.items():
            waves.setdefault(k, []).append(seq)
        return [sorted(waves[k], key=lambda s: (len(s), s)) for k in sorted(waves)]


@dataclass
class GraphFamily:
    node: DegSeqNode
    graphs: FrozenSet[str]     # canonical graph6 strings

    def sorted_graphs(self) -> List[str]:
        return sorted(self.graphs)


# ------------------------------------------------------------------
# PUBLIC API
# ------------------------------------------------------------------

def sink_sequences(n: int, m: int) -> List[DegreeSequence]:
    """Non-increasing graphical sequences of length n summing to 2m."""
    if n < 0 or not 0 <= m <= n * (n - 1) // 2:
        raise ValueError(f"need 0 <= m <= C(n,2); got n={n}, m={m}")
    out: List[DegreeSequence] = []

    def extend(prefix: List[int], remaining: int, cap: int):
        slots = n - len(prefix)
        if slots == 0:
            if remaining == 0 and is_graphical(prefix):
                out.append(tuple(prefix))
            return
        for value in range(min(cap, remaining), -1, -1):
            if value * slots < remaining:
                break
            prefix.append(value)
            extend(prefix, remaining - value, value)
            prefix.pop()

    extend([], 2 * m, max(n - 1, 0))
    return sorted(out, reverse=True)


def in_neighbours(d: DegreeSequence) -> Tuple[Optional[str], List[DegreeSequence]]:
    """The rule that applies to d and its in-neighbours under that rule."""
    n = len(d)
    if n == 0:
        return None, []
    if 2 * sum(d) > n * (n - 1):
        return RULE_COMPLEMENT, [tuple(n - 1 - x for x in reversed(d))]
    if d[-1] <= 1:
        return RULE_LEAF_BATCH, _leaf_batch_preds(d)
    return RULE_VERTEX_ADD, _vertex_removal_preds(d)


def build_dag(sinks: List[DegreeSequence]) -> DegSeqDag:
    nodes: Dict[DegreeSequence, DegSeqNode] = {}
    stack = [tuple(s) for s in sinks]
    for s in stack:
        if not is_graphical(s):
            raise ValueError(f"sink {s} is not graphical")
        nodes.setdefault(s, DegSeqNode(s))

    while stack:
        seq = stack.pop()
        node = nodes[seq]
        if node.in_edges or not seq:
            continue
        rule, preds = in_neighbours(seq)
        for p in preds:
            if p not in nodes:
                nodes[p] = DegSeqNode(p)
                stack.append(p)
            node.in_edges.append((p, rule))
            nodes[p].out_edges.append(seq)
    return DegSeqDag(nodes, [tuple(s) for s in sinks])


def expand_node(node: DegSeqNode, pred_graphs: Mapping[DegreeSequence, FrozenSet[str]]) -> FrozenSet[str]:
    """All graphs with node.sequence, from the families of its in-neighbours."""
    d = node.sequence
    if not d:
        return frozenset({graph6_encode(Graph.empty(0))})
    found = set()
    for pred, rule in node.in_edges:
        for text in pred_graphs[pred]:
            g = graph6_decode(text)
            if rule == RULE_COMPLEMENT:
                found.add(canonical_key(complement(g)))
            elif rule == RULE_LEAF_BATCH:
                found.update(_attach_leaves(g, d))
            else:
                found.update(_attach_vertex(g, d))
    return frozenset(found)


def expand_families(dag: DegSeqDag) -> Dict[DegreeSequence, GraphFamily]:
    families: Dict[DegreeSequence, FrozenSet[str]] = {}
    for wave in dag.levels():
        for seq in wave:
            node = dag.nodes[seq]
            families[seq] = expand_node(node, {p: families[p] for p, _ in node.in_edges})
    return {s: GraphFamily(dag.nodes[s], families[s]) for s in dag.sinks}


def enumerate_graphs(n: int, m: int) -> Iterator[Graph]:
    """Every n-vertex m-edge graph up to isomorphism, in sorted canonical graph6 order."""
    families = expand_families(build_dag(sink_sequences(n, m)))
    for text in sorted(set().union(*(f.graphs for f in families.values()))):
        yield graph6_decode(text)


def relevant_pairs() -> List[Tuple[int, int, int]]:
    """(N, M, a) for every computer-checked case of the induction base."""
    pairs = [(n, n * (n - 1) // 2 - (n - 4), 0) for n in range(7, 11)]
    pairs += [(n, n * (n - 1) // 2 - (n - 4 + a), a) for n in range(11, 14) for a in range(5)]
    return pairs


def family_filename(n: int, m: int, seq: DegreeSequence) -> str:
    return f"N{n}M{m}_d{'-'.join(str(x) for x in seq)}.g6"


def write_families(families: Mapping[DegreeSequence, GraphFamily], out_dir, n: int, m: int) -> Path:
    """One sorted graph6 file per sink sequence plus manifest.txt; returns the manifest path."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        lines = ["sequence\tcount"]
        total = 0
        for seq in sorted(families, reverse=True):
            graphs = families[seq].sorted_graphs()
            with open(out / family_filename(n, m, seq), "w", encoding="utf-8") as f:
                f.writelines(text + "\n" for text in graphs)
            lines.append(f"{','.join(str(x) for x in seq)}\t{len(graphs)}")
            total += len(graphs)
        lines.append(f"total\t{total}")
        manifest = out / "manifest.txt"
        manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write families under {out}: {e}") from e
    return manifest


class ProductionGraphEnumerator:
    """
    FINAL – Isomorph-free census by degree sequence
    Families of one topological wavefront are independent and are
    expanded in parallel; results are identical for any job count.
    """

    def __init__(self, jobs: int = 1, show_progress: bool = False):
        self.jobs = max(1, jobs)
        self.show_progress = show_progress
        self.logger = self._setup_logging()

    # ------------------------------------------------------------------
    # PUBLIC API
    # ------------------------------------------------------------------

    def enumerate(self, n: int, m: int) -> Dict[DegreeSequence, GraphFamily]:
        sinks = sink_sequences(n, m)
        dag = build_dag(sinks)
        self.logger.info(f"N={n} M={m}: {len(sinks)} sink sequences, {len(dag.nodes)} DAG nodes")
        families = self._expand(dag)
        total = sum(len(f.graphs) for f in families.values())
        self.logger.info(f"N={n} M={m}: {total} graphs up to isomorphism")
        return families

    def graphs(self, n: int, m: int) -> List[str]:
        families = self.enumerate(n, m)
        return sorted(set().union(*(f.graphs for f in families.values())))

    # ------------------------------------------------------------------
    # INTERNAL HELPERS
    # ------------------------------------------------------------------

    def _expand(self, dag: DegSeqDag) -> Dict[DegreeSequence, GraphFamily]:
        families: Dict[DegreeSequence, FrozenSet[str]] = {}
        waves = dag.levels()
        for wave in tqdm(waves, desc="Expanding families", disable=not self.show_progress):
            tasks = [
                (seq, dag.nodes[seq], {p: families[p] for p, _ in dag.nodes[seq].in_edges})
                for seq in wave
            ]
            if self.jobs > 1 and len(tasks) > 1:
                results = Parallel(n_jobs=self.jobs)(
                    delayed(expand_node)(node, preds) for _, node, preds in tasks
                )
            else:
                results = [expand_node(node, preds) for _, node, preds in tasks]
            for (seq, _, _), graphs in zip(tasks, results):
                families[seq] = graphs
            self.logger.debug(f"wave of {len(wave)} nodes expanded")
        return {s: GraphFamily(dag.nodes[s], families[s]) for s in dag.sinks}

    def _setup_logging(self):
        logger = logging.getLogger("GraphEnumerator")
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
# INTERNAL HELPERS
# ------------------------------------------------------------------

def _leaf_batch_preds(d: DegreeSequence) -> List[DegreeSequence]:
    i = sum(1 for x in d if x >= 2)
    core = d[:i]
    budget = sum(d[i:])
    out: List[DegreeSequence] = []

    def extend(prefix: List[int], j: int, spent: int):
        if j == i:
            if is_graphical(prefix):
                out.append(tuple(prefix))
            return
        hi = core[j] if j == 0 else min(core[j], prefix[-1])
        for value in range(hi, -1, -1):
            cost = spent + core[j] - value
            if cost > budget:
                break
            prefix.append(value)
            extend(prefix, j + 1, cost)
            prefix.pop()

    extend([], 0, 0)
    return out


def _vertex_removal_preds(d: DegreeSequence) -> List[DegreeSequence]:
    # remove a max-degree vertex; within each block of equal values the
    # decremented entries are the last ones, which keeps d' sorted
    head, rest = d[0], d[1:]
    blocks: List[Tuple[int, int]] = []
    for x in rest:
        if blocks and blocks[-1][0] == x:
            blocks[-1] = (x, blocks[-1][1] + 1)
        else:
            blocks.append((x, 1))

    out: List[DegreeSequence] = []

    def choose(b: int, left: int, acc: List[int]):
        if b == len(blocks):
            if left == 0 and is_graphical(acc):
                out.append(tuple(acc))
            return
        value, count = blocks[b]
        room = sum(c for v, c in blocks[b:] if v >= 1)
        if left > room:
            return
        top = min(count, left) if value >= 1 else 0
        for t in range(top, -1, -1):
            choose(b + 1, left - t, acc + [value] * (count - t) + [value - 1] * t)

    choose(0, head, [])
    return out


def _attach_leaves(core: Graph, d: DegreeSequence) -> FrozenSet[str]:
    # new pendant vertices on core vertices, spare leaves paired into K2s, then isolated vertices
    n = len(d)
    i = sum(1 for x in d if x >= 2)
    ones = sum(1 for x in d if x == 1)
    zeros = n - i - ones
    if core.n != i:
        return frozenset()
    targets = Counter(d[:i])
    degrees = [core.degree(v) for v in range(i)]
    found = set()

    def assign(v: int, extra: List[int], used: int):
        if used > ones:
            return
        if v == i:
            if (ones - used) % 2 == 0:
                found.add(canonical_key(_build_leaf_graph(core, extra, ones - used, zeros)))
            return
        for t in sorted(targets):
            if targets[t] and t >= degrees[v]:
                targets[t] -= 1
                extra.append(t - degrees[v])
                assign(v + 1, extra, used + t - degrees[v])
                extra.pop()
                targets[t] += 1

    assign(0, [], 0)
    return frozenset(found)


def _build_leaf_graph(core: Graph, extra: List[int], spare: int, isolated: int) -> Graph:
    edges = list(core.edges())
    nxt = core.n
    for v, x in enumerate(extra):
        for _ in range(x):
            edges.append((v, nxt))
            nxt += 1
    for _ in range(spare // 2):
        edges.append((nxt, nxt + 1))
        nxt += 2
    return Graph.from_edges(nxt + isolated, edges)


def _attach_vertex(g: Graph, d: DegreeSequence) -> FrozenSet[str]:
    # s[k] = number of chosen neighbours of degree k, forced by c_k - s_k + s_{k-1} = target_k
    n = len(d)
    if g.n != n - 1:
        return frozenset()
    head = d[0]
    target = Counter(d[1:])
    by_degree: Dict[int, List[int]] = {}
    for v in range(g.n):
        by_degree.setdefault(g.degree(v), []).append(v)

    counts = []
    prev = 0
    for k in range(n):
        have = len(by_degree.get(k, []))
        s_k = have + prev - target[k]
        if not 0 <= s_k <= have:
            return frozenset()
        counts.append(s_k)
        prev = s_k
    if sum(counts) != head:
        return frozenset()

    choices = [combinations(by_degree.get(k, []), s_k) for k, s_k in enumerate(counts) if s_k]
    found = set()
    for picked in product(*choices):
        rows = list(g.rows) + [0]
        for group in picked:
            for v in group:
                rows[v] |= 1 << (n - 1)
                rows[n - 1] |= 1 << v
        found.add(canonical_key(Graph(n, tuple(rows))))
    return frozenset(found)
