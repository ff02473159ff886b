# hamilton.py

from typing import List, Tuple

from graph_core import Graph


class HamiltonPreconditionError(ValueError):
    pass


def hamilton_cycle(g: Graph) -> Tuple[int, ...]:
    """
    Hamilton cycle of a graph with at most n - 3 missing edges.
    Repairs one gap of the current cyclic order per rotation: for a gap
    (x, y) there is a j with x ~ c[j] and y ~ c[j+1], and reversing
    c[1..j] replaces both pairs by edges.
    """
    n = g.n
    if n < 3:
        raise HamiltonPreconditionError(f"a Hamilton cycle needs n >= 3, got n={n}")
    if g.missing_count > n - 3:
        raise HamiltonPreconditionError(f"{g.missing_count} missing edges exceeds n - 3 = {n - 3}")
    return _rotate_to_cycle(g, list(range(n)))


def near_hamilton_order(g: Graph, a: int) -> Tuple[Tuple[int, ...], int]:
    """
    Cyclic order of all vertices in which all but alpha <= a consecutive
    pairs are edges. Phantom edges between the non-adjacent pair with the
    largest combined non-degree are added until at most d - 3 pairs are
    missing; alpha counts the phantoms the cycle actually uses.
    Two adjacent vertices give the order (x0, x1) with alpha = 1.
    """
    d = g.n
    if not 0 <= a <= 4:
        raise HamiltonPreconditionError(f"defect budget a={a} outside 0..4")
    if d == 2:
        if not g.has_edge(0, 1) or a < 1:
            raise HamiltonPreconditionError("two vertices need an edge and a >= 1")
        return (0, 1), 1
    if d < 3:
        raise HamiltonPreconditionError(f"need at least 3 vertices, got {d}")
    if g.missing_count > d - 3 + a:
        raise HamiltonPreconditionError(f"{g.missing_count} missing edges exceeds d - 3 + a = {d - 3 + a}")

    augmented = g
    while augmented.missing_count > d - 3:
        u, v = max(
            augmented.non_edges(),
            key=lambda e: (augmented.non_degree(e[0]) + augmented.non_degree(e[1]), -e[0], -e[1])
        )
        augmented = augmented.with_edge(u, v)

    order = _rotate_to_cycle(augmented, list(range(d)))
    alpha = sum(1 for i in range(d) if not g.has_edge(order[i], order[(i + 1) % d]))
    assert alpha <= a
    return order, alpha


def defects(g: Graph, order: Tuple[int, ...]) -> List[Tuple[int, int]]:
    """Consecutive pairs of a cyclic order that are not edges of g."""
    k = len(order)
    if k == 2:
        return [] if g.has_edge(*order) else [order]
    return [(order[i], order[(i + 1) % k]) for i in range(k) if not g.has_edge(order[i], order[(i + 1) % k])]


def _rotate_to_cycle(g: Graph, cycle: List[int]) -> Tuple[int, ...]:
    n = len(cycle)
    while True:
        gap = next((i for i in range(n) if not g.has_edge(cycle[i], cycle[(i + 1) % n])), None)
        if gap is None:
            return tuple(cycle)
        cycle = cycle[gap:] + cycle[:gap]
        x, y = cycle[0], cycle[1]
        # Ore: d(x) + d(y) >= n, so the two index sets below intersect
        assert g.degree(x) + g.degree(y) >= n, f"Ore condition fails for {x}, {y}"
        j = next(
            j for j in range(2, n - 1)
            if g.has_edge(x, cycle[j]) and g.has_edge(y, cycle[j + 1])
        )
        cycle[1:j + 1] = reversed(cycle[1:j + 1])
