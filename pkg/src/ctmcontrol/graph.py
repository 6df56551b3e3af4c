"""Finite directed graphs for controlled Markov chains.

Nodes are 0-based integers. A graph is valid when it has at least two
nodes, no self-loops, no duplicate edges, an outgoing edge at every node,
and is strongly connected. Construction rejects anything else, so every
Graph instance downstream code sees is usable as a chain's state space.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DuplicateEdge, IsolatedNode, NotStronglyConnected, SelfLoop


@dataclass(frozen=True)
class Graph:
    """Immutable directed graph with per-node sorted adjacency.

    out_neighbors[i] lists the targets of node i's outgoing edges in
    ascending order; this ordering is the canonical edge order used by
    cost models, policies and file serialization.
    """

    n_nodes: int
    out_neighbors: tuple[tuple[int, ...], ...]

    def degree(self, i: int) -> int:
        return len(self.out_neighbors[i])

    @property
    def n_edges(self) -> int:
        return sum(len(nb) for nb in self.out_neighbors)

    def edges(self) -> list[tuple[int, int]]:
        """All edges in canonical order: by source, then by target."""
        return [(i, j) for i in range(self.n_nodes) for j in self.out_neighbors[i]]


def _reaches_all(n: int, adjacency: Sequence[Sequence[int]], start: int) -> bool:
    seen = [False] * n
    seen[start] = True
    queue = deque([start])
    count = 1
    while queue:
        i = queue.popleft()
        for j in adjacency[i]:
            if not seen[j]:
                seen[j] = True
                count += 1
                queue.append(j)
    return count == n


def build_graph(n_nodes: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Validate an edge list and return the canonical Graph.

    Raises SelfLoop, DuplicateEdge, IsolatedNode or NotStronglyConnected
    when the data cannot describe a controlled chain's state space.
    Strong connectivity is decided by two breadth-first traversals, one
    on the graph and one on its reverse, both from node 0.
    """
    if n_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {n_nodes}")
    out: list[set[int]] = [set() for _ in range(n_nodes)]
    rev: list[set[int]] = [set() for _ in range(n_nodes)]
    for i, j in edges:
        if not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise ValueError(f"edge ({i}, {j}) references a node outside 0..{n_nodes - 1}")
        if i == j:
            raise SelfLoop(f"edge ({i}, {i}) is a self-loop")
        if j in out[i]:
            raise DuplicateEdge(f"edge ({i}, {j}) appears more than once")
        out[i].add(j)
        rev[j].add(i)
    for i in range(n_nodes):
        if not out[i] and not rev[i]:
            raise IsolatedNode(f"node {i} has no edges")
    adjacency = [sorted(s) for s in out]
    if not _reaches_all(n_nodes, adjacency, 0) or not _reaches_all(n_nodes, [sorted(s) for s in rev], 0):
        raise NotStronglyConnected("graph is not strongly connected")
    return Graph(n_nodes, tuple(tuple(a) for a in adjacency))
