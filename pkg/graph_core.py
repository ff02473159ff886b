# graph_core.py

from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

MAX_VERTICES = 64

Edge = Tuple[int, int]
Triangle = Tuple[int, int, int]
DegreeSequence = Tuple[int, ...]


class Graph6ParseError(ValueError):
    """Malformed graph6 text; `offset` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


# ------------------------------------------------------------------
# DATA MODELS
# ------------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    """
    Simple undirected graph on vertices 0..n-1.
    rows[u] is the adjacency bitmask of u (bit v set iff uv is an edge).
    """
    n: int
    rows: Tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.n <= MAX_VERTICES:
            raise ValueError(f"vertex count {self.n} outside 0..{MAX_VERTICES}")
        if len(self.rows) != self.n:
            raise ValueError("adjacency rows do not match vertex count")

    # ---------------- constructors ----------------

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "Graph":
        rows = [0] * n
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge {(u, v)} out of range for n={n}")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, tuple(rows))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        full = (1 << n) - 1
        return cls(n, tuple(full & ~(1 << u) for u in range(n)))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, (0,) * n)

    # ---------------- queries ----------------

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.rows[u] >> v & 1)

    def neighbors(self, u: int) -> List[int]:
        return _bits(self.rows[u])

    def degree(self, u: int) -> int:
        return self.rows[u].bit_count()

    def non_degree(self, u: int) -> int:
        return self.n - 1 - self.degree(u)

    def edges(self) -> List[Edge]:
        return [(u, v) for u in range(self.n) for v in _bits(self.rows[u] >> (u + 1) << (u + 1))]

    def non_edges(self) -> List[Edge]:
        return [(u, v) for u, v in combinations(range(self.n), 2) if not self.has_edge(u, v)]

    @property
    def edge_count(self) -> int:
        return sum(r.bit_count() for r in self.rows) // 2

    @property
    def missing_count(self) -> int:
        return self.n * (self.n - 1) // 2 - self.edge_count

    def degree_sequence(self) -> DegreeSequence:
        return tuple(sorted((self.degree(u) for u in range(self.n)), reverse=True))

    # ---------------- derived graphs ----------------

    def with_edge(self, u: int, v: int) -> "Graph":
        rows = list(self.rows)
        rows[u] |= 1 << v
        rows[v] |= 1 << u
        return Graph(self.n, tuple(rows))

    def without_edge(self, u: int, v: int) -> "Graph":
        rows = list(self.rows)
        rows[u] &= ~(1 << v)
        rows[v] &= ~(1 << u)
        return Graph(self.n, tuple(rows))

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """perm[old] = new label."""
        rows = [0] * self.n
        for u in range(self.n):
            pu = perm[u]
            for v in _bits(self.rows[u]):
                rows[pu] |= 1 << perm[v]
        return Graph(self.n, tuple(rows))

    def induced(self, vertices: Sequence[int]) -> Tuple["Graph", Tuple[int, ...]]:
        """
        Subgraph on `vertices`, relabelled 0..k-1 in the given order.
        Returns the graph and the map new label -> old label.
        """
        mapping = tuple(vertices)
        index = {v: i for i, v in enumerate(mapping)}
        rows = [0] * len(mapping)
        for i, v in enumerate(mapping):
            for w in _bits(self.rows[v]):
                j = index.get(w)
                if j is not None:
                    rows[i] |= 1 << j
        return Graph(len(mapping), tuple(rows)), mapping

    def remove_vertices(self, removed: Iterable[int]) -> Tuple["Graph", Tuple[int, ...]]:
        gone = set(removed)
        return self.induced([v for v in range(self.n) if v not in gone])


# ------------------------------------------------------------------
# PUBLIC API
# ------------------------------------------------------------------

def complement(g: Graph) -> Graph:
    full = (1 << g.n) - 1
    return Graph(g.n, tuple(full & ~r & ~(1 << u) for u, r in enumerate(g.rows)))


def non_degree(g: Graph, u: int) -> int:
    return g.non_degree(u)


def missing_count(g: Graph) -> int:
    return g.missing_count


def induced(g: Graph, vertices: Sequence[int]) -> Tuple[Graph, Tuple[int, ...]]:
    return g.induced(vertices)


def complete_minus(n: int, pairs: Iterable[Edge]) -> Graph:
    g = Graph.complete(n)
    for u, v in pairs:
        g = g.without_edge(u, v)
    return g


def tight_family_graph(n: int) -> Graph:
    """
    n vertices, n-3 non-edges: the last vertex misses 3..n-2, and 0 misses 1.
    No fractional triangle decomposition exists for n >= 8.
    """
    if n < 5:
        raise ValueError("tight family is defined for n >= 5")
    pairs = [(x, n - 1) for x in range(3, n - 1)] + [(0, 1)]
    return complete_minus(n, pairs)


def is_graphical(d: Sequence[int]) -> bool:
    """Erdős–Gallai test on a non-increasing sequence."""
    d = sorted(d, reverse=True)
    n = len(d)
    if any(x < 0 or x >= n for x in d):
        return False
    if sum(d) % 2:
        return False
    prefix = 0
    for k in range(1, n + 1):
        prefix += d[k - 1]
        tail = sum(min(k, x) for x in d[k:])
        if prefix > k * (k - 1) + tail:
            return False
    return True


def triangles(g: Graph) -> List[Triangle]:
    """All triangles (u < v < w), lexicographic order."""
    out = []
    for u in range(g.n):
        higher_u = g.rows[u] >> (u + 1) << (u + 1)
        for v in _bits(higher_u):
            common = higher_u & g.rows[v] >> (v + 1) << (v + 1)
            for w in _bits(common):
                out.append((u, v, w))
    return out


def canonical_form(g: Graph) -> Graph:
    return canonical_labeling(g)[0]


def canonical_labeling(g: Graph) -> Tuple[Graph, Tuple[int, ...]]:
    """
    Canonical relabelling by degree refinement plus individualisation.
    The search runs on the sparser of g and its complement; the winning
    order is the one whose upper-triangle bit-string (graph6 order) is
    lexicographically smallest. Returns (canonical graph, perm) with
    perm[old] = new.
    """
    n = g.n
    if n <= 1:
        return g, tuple(range(n))
    uses_complement = 2 * g.edge_count > n * (n - 1) // 2
    h = complement(g) if uses_complement else g
    order = _minimal_order(h)
    perm = [0] * n
    for position, v in enumerate(order):
        perm[v] = position
    perm = tuple(perm)
    return g.relabel(perm), perm


def canonical_key(g: Graph) -> str:
    return graph6_encode(canonical_form(g))


def graph6_encode(g: Graph) -> str:
    n = g.n
    if n > MAX_VERTICES:
        raise ValueError(f"graph6 encoding supports n <= {MAX_VERTICES}")
    out = [_encode_order(n)]
    acc, filled = 0, 0
    for j in range(1, n):
        row = g.rows[j]
        for i in range(j):
            acc = (acc << 1) | (row >> i & 1)
            filled += 1
            if filled == 6:
                out.append(chr(acc + 63))
                acc, filled = 0, 0
    if filled:
        out.append(chr((acc << (6 - filled)) + 63))
    return "".join(out)


def graph6_decode(text: str) -> Graph:
    data = text.strip()
    base = 0
    if data.startswith(">>graph6<<"):
        data = data[len(">>graph6<<"):]
        base = len(">>graph6<<")
    if not data:
        raise Graph6ParseError("empty graph6 string", base)

    for i, ch in enumerate(data):
        if not 63 <= ord(ch) <= 126:
            raise Graph6ParseError(f"byte {ch!r} outside graph6 range", base + i)

    if data[0] == "~":
        if len(data) > 1 and data[1] == "~":
            raise Graph6ParseError(f"8-byte size header exceeds n <= {MAX_VERTICES}", base + 1)
        if len(data) < 4:
            raise Graph6ParseError("truncated long-form size header", base + len(data))
        n = 0
        for ch in data[1:4]:
            n = (n << 6) | (ord(ch) - 63)
        start = 4
    else:
        n = ord(data[0]) - 63
        start = 1
    if n > MAX_VERTICES:
        raise Graph6ParseError(f"vertex count {n} exceeds {MAX_VERTICES}", base)

    nbits = n * (n - 1) // 2
    expected = (nbits + 5) // 6
    payload = data[start:]
    if len(payload) < expected:
        raise Graph6ParseError("truncated adjacency payload", base + start + len(payload))
    if len(payload) > expected:
        raise Graph6ParseError("trailing bytes after adjacency payload", base + start + expected)

    rows = [0] * n
    k = 0
    for j in range(1, n):
        for i in range(j):
            byte = ord(payload[k // 6]) - 63
            if byte >> (5 - k % 6) & 1:
                rows[i] |= 1 << j
                rows[j] |= 1 << i
            k += 1
    return Graph(n, tuple(rows))


# ------------------------------------------------------------------
# INTERNAL HELPERS
# ------------------------------------------------------------------

def _bits(mask: int) -> List[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _encode_order(n: int) -> str:
    if n <= 62:
        return chr(n + 63)
    return "~" + "".join(chr(((n >> shift) & 0x3F) + 63) for shift in (12, 6, 0))


def _refine(rows: Sequence[int], cells: List[List[int]]) -> List[List[int]]:
    # equitable refinement; new cells ordered by neighbour-count signature
    while True:
        masks = [sum(1 << v for v in cell) for cell in cells]
        refined: List[List[int]] = []
        for cell in cells:
            if len(cell) == 1:
                refined.append(cell)
                continue
            groups: Dict[Tuple[int, ...], List[int]] = {}
            for v in cell:
                sig = tuple((rows[v] & m).bit_count() for m in masks)
                groups.setdefault(sig, []).append(v)
            for sig in sorted(groups):
                refined.append(groups[sig])
        if len(refined) == len(cells):
            return refined
        cells = refined


def _order_key(rows: Sequence[int], order: Sequence[int]) -> int:
    key = 0
    for j in range(1, len(order)):
        row = rows[order[j]]
        for i in range(j):
            key = (key << 1) | (row >> order[i] & 1)
    return key


def _are_twins(rows: Sequence[int], v: int, w: int) -> bool:
    return rows[v] & ~(1 << w) == rows[w] & ~(1 << v)


def _twin_generators(rows: Sequence[int], n: int) -> List[Tuple[int, ...]]:
    # twin classes are equivalence classes; consecutive transpositions generate each one
    classes: List[List[int]] = []
    for v in range(n):
        for cls in classes:
            if _are_twins(rows, v, cls[0]):
                cls.append(v)
                break
        else:
            classes.append([v])
    gens = []
    for cls in classes:
        for v, w in zip(cls, cls[1:]):
            perm = list(range(n))
            perm[v], perm[w] = w, v
            gens.append(tuple(perm))
    return gens


def _same_orbit(v: int, seeds: Sequence[int], gens: Sequence[Tuple[int, ...]]) -> bool:
    targets = set(seeds)
    seen = {v}
    frontier = [v]
    while frontier:
        x = frontier.pop()
        if x in targets:
            return True
        for g in gens:
            y = g[x]
            if y not in seen:
                seen.add(y)
                frontier.append(y)
    return False


@dataclass
class _NodeRecord:
    # first leaf reached below a search node, and how many children it has opened
    key: Optional[int] = None
    order: Optional[List[int]] = None
    children: int = 0


def _minimal_order(h: Graph) -> List[int]:
    """
    Individualisation-refinement search for the order with the smallest
    key, pruned by automorphisms.

    A leaf whose key equals the first leaf below an ancestor node, reached
    through a later child of that node, gives an automorphism fixing the
    ancestor's path and mapping its first child onto the current one; the
    current child's subtree is an image of one already searched, so the
    search jumps back to the ancestor. Twin swaps and every automorphism
    found this way also prune children that share an orbit with a child
    already tried.
    """
    rows, n = h.rows, h.n
    identity = tuple(range(n))
    gens = _twin_generators(rows, n)
    best_key: Optional[int] = None
    best_order: List[int] = []

    def leaf(order: List[int], records: List[_NodeRecord]) -> Optional[int]:
        nonlocal best_key, best_order
        key = _order_key(rows, order)
        if best_key is None or key < best_key:
            best_key, best_order = key, order
        for depth, record in enumerate(records):
            if record.key is None:
                record.key, record.order = key, order
            elif record.children > 1 and record.key == key:
                gamma = list(identity)
                for x, y in zip(record.order, order):
                    gamma[x] = y
                if tuple(gamma) != identity:
                    gens.append(tuple(gamma))
                return depth
        return None

    def search(cells: List[List[int]], path: List[int], records: List[_NodeRecord]) -> Optional[int]:
        # returns the depth to jump back to, or None
        cells = _refine(rows, cells)
        target = next((i for i, c in enumerate(cells) if len(c) > 1), None)
        if target is None:
            return leaf([c[0] for c in cells], records)
        depth = len(path)
        cell = cells[target]
        tried: List[int] = []
        for v in sorted(cell):
            if tried:
                stabiliser = [g for g in gens if all(g[p] == p for p in path)]
                if _same_orbit(v, tried, stabiliser):
                    continue
            tried.append(v)
            records[depth].children += 1
            rest = [w for w in cell if w != v]
            jump = search(cells[:target] + [[v], rest] + cells[target + 1:], path + [v], records + [_NodeRecord()])
            if jump is not None and jump < depth:
                return jump
        return None

    search([list(range(n))], [], [_NodeRecord()])
    return best_order
