"""Chimera hardware graph and the random walks used to place loops and chains.

Qubit ``(row, col, side, k)`` has linear index
``((row * N + col) * 2 + side) * L + k`` where side 0 is the vertical shore
(couples to row +/- 1) and side 1 the horizontal shore (couples to col +/- 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

VERTICAL, HORIZONTAL = 0, 1


class WalkBudgetExceeded(RuntimeError):
    """Random loop generation ran out of rejection attempts."""


@dataclass(frozen=True, eq=False)
class ChimeraGraph:
    rows: int
    cols: int
    shore: int
    adjacency: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def n_qubits(self) -> int:
        return self.rows * self.cols * 2 * self.shore

    def qubit(self, row: int, col: int, side: int, k: int) -> int:
        return ((row * self.cols + col) * 2 + side) * self.shore + k

    def coords(self, q: int) -> tuple[int, int, int, int]:
        cell, rem = divmod(q, 2 * self.shore)
        side, k = divmod(rem, self.shore)
        row, col = divmod(cell, self.cols)
        return row, col, side, k

    def cell_qubits(self, row: int, col: int) -> list[int]:
        base = (row * self.cols + col) * 2 * self.shore
        return list(range(base, base + 2 * self.shore))

    def has_edge(self, a: int, b: int) -> bool:
        return b in self._adjsets[a]

    def __post_init__(self):
        object.__setattr__(self, "_adjsets", tuple(frozenset(a) for a in self.adjacency))


def build_chimera(rows: int, cols: int, shore: int = 4) -> ChimeraGraph:
    """Chimera graph of ``rows x cols`` unit cells, each a K_{shore,shore}."""
    if rows < 1 or cols < 1 or shore < 1:
        raise ValueError("chimera dimensions must all be >= 1")
    L = shore

    def q(r, c, u, k):
        return ((r * cols + c) * 2 + u) * L + k

    edges = []
    for r, c in product(range(rows), range(cols)):
        for a, b in product(range(L), range(L)):
            edges.append((q(r, c, VERTICAL, a), q(r, c, HORIZONTAL, b)))
    for r, c, k in product(range(rows - 1), range(cols), range(L)):
        edges.append((q(r, c, VERTICAL, k), q(r + 1, c, VERTICAL, k)))
    for r, c, k in product(range(rows), range(cols - 1), range(L)):
        edges.append((q(r, c, HORIZONTAL, k), q(r, c + 1, HORIZONTAL, k)))
    edges = sorted((min(a, b), max(a, b)) for a, b in edges)
    n = rows * cols * 2 * L
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    return ChimeraGraph(rows, cols, shore, tuple(tuple(sorted(a)) for a in adj), tuple(edges))


def _admissible(graph, v, mask, exclude=()):
    return [u for u in graph.adjacency[v] if u not in mask and u not in exclude]


def self_avoiding_walk(graph: ChimeraGraph, start: int, length: int, mask, rng):
    """Non-self-intersecting random walk of ``length`` edges.

    Each step picks uniformly among unmasked, unvisited neighbours. Returns
    the ``length + 1`` visited vertices, or ``None`` when the walk dead-ends
    (callers resample).
    """
    mask = frozenset(mask)
    if length < 1:
        raise ValueError("walk length must be >= 1")
    if not 0 <= start < graph.n_qubits or start in mask:
        raise ValueError(f"invalid walk start {start}")
    path = [start]
    seen = {start}
    for _ in range(length):
        options = _admissible(graph, path[-1], mask, seen)
        if not options:
            return None
        nxt = options[int(rng.integers(len(options)))]
        path.append(nxt)
        seen.add(nxt)
    return path


def random_loop(graph: ChimeraGraph, mask, max_len: int, rng, budget: int = 10_000):
    """Random simple cycle of at most ``max_len`` edges avoiding ``mask``.

    A walk from a uniformly chosen unmasked vertex (no immediate backtracking)
    runs until it steps onto its own path; the closed part is the cycle.
    Oversize cycles and dead ends are rejected and the walk restarts.
    """
    if max_len < 3:
        raise ValueError("max_len must be >= 3")
    mask = frozenset(mask)
    free = [v for v in range(graph.n_qubits) if v not in mask]
    return _random_loop(graph, mask, free, max_len, rng, budget)


def _random_loop(graph, mask, free, max_len, rng, budget, nbrs=None):
    if not free:
        raise WalkBudgetExceeded("no unmasked vertices to walk on")
    if nbrs is None:
        nbrs = masked_adjacency(graph, mask)
    for _ in range(budget):
        start = free[int(rng.integers(len(free)))]
        path = [start]
        pos = {start: 0}
        prev = -1
        while True:
            options = [u for u in nbrs[path[-1]] if u != prev]
            if not options:
                break
            nxt = options[int(rng.integers(len(options)))]
            if nxt in pos:
                cycle = path[pos[nxt]:]
                if len(cycle) <= max_len:
                    return cycle
                break
            prev = path[-1]
            pos[nxt] = len(path)
            path.append(nxt)
    raise WalkBudgetExceeded(f"random_loop: rejection budget of {budget} attempts exhausted")


def masked_adjacency(graph: ChimeraGraph, mask) -> list[tuple[int, ...]]:
    return [tuple(u for u in adj if u not in mask) for adj in graph.adjacency]


def on_short_cycle(graph: ChimeraGraph, mask) -> frozenset[int]:
    """Unmasked qubits lying on an unmasked intra-cell 4-cycle.

    A qubit qualifies when its cell keeps another unmasked qubit on its own
    shore and at least two on the opposite shore.
    """
    mask = frozenset(mask)
    out = set()
    for r, c in product(range(graph.rows), range(graph.cols)):
        qs = graph.cell_qubits(r, c)
        sides = [[q for q in qs[s * graph.shore:(s + 1) * graph.shore] if q not in mask]
                 for s in (VERTICAL, HORIZONTAL)]
        if len(sides[0]) >= 2 and len(sides[1]) >= 2:
            out.update(sides[0])
            out.update(sides[1])
    return frozenset(out)


def is_simple_cycle(graph: ChimeraGraph, cycle) -> bool:
    if len(cycle) < 3 or len(set(cycle)) != len(cycle):
        return False
    return all(graph.has_edge(a, b) for a, b in zip(cycle, cycle[1:] + cycle[:1]))


def is_bipartite(graph: ChimeraGraph) -> bool:
    colour = -np.ones(graph.n_qubits, dtype=int)
    for root in range(graph.n_qubits):
        if colour[root] >= 0:
            continue
        colour[root] = 0
        stack = [root]
        while stack:
            v = stack.pop()
            for u in graph.adjacency[v]:
                if colour[u] < 0:
                    colour[u] = 1 - colour[v]
                    stack.append(u)
                elif colour[u] == colour[v]:
                    return False
    return True
