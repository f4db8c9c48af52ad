"""Communication topology over the exosystem (node 0) and agents 1..N."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ConfigError

DEFAULT_EDGES = ((0, 1), (1, 2), (2, 1), (2, 3), (3, 2), (3, 4), (4, 3))


@dataclass(frozen=True)
class Topology:
    """Directed graph; an edge ``(j, i)`` means node i receives from node j."""

    n_agents: int
    edges: frozenset

    def __init__(self, n_agents, edges):
        n_agents = int(n_agents)
        if n_agents < 1:
            raise ConfigError("topology needs at least one agent")
        clean = set()
        for e in edges:
            if len(e) != 2:
                raise ConfigError(f"edge {e!r} is not a pair")
            j, i = e
            if int(j) != j or int(i) != i:
                raise ConfigError(f"edge {e!r} has non-integer endpoints (weights are not supported)")
            j, i = int(j), int(i)
            if not (0 <= j <= n_agents and 0 <= i <= n_agents):
                raise ConfigError(f"edge {e!r} references a node outside 0..{n_agents}")
            if i == j:
                raise ConfigError(f"self-loop {e!r} is not allowed")
            if i == 0:
                raise ConfigError(f"edge {e!r} points into the exosystem node")
            clean.add((j, i))
        object.__setattr__(self, "n_agents", n_agents)
        object.__setattr__(self, "edges", frozenset(clean))

    @classmethod
    def default(cls):
        """Node 0 feeds agent 1; agents form the undirected chain 1-2-3-4."""
        return cls(4, DEFAULT_EDGES)

    @property
    def adjacency(self):
        """(N+1) x (N+1) matrix with ``a[i, j] = 1`` iff (j, i) is an edge."""
        a = np.zeros((self.n_agents + 1, self.n_agents + 1))
        for j, i in self.edges:
            a[i, j] = 1.0
        return a

    def in_neighbors(self, i):
        return sorted(j for j, k in self.edges if k == i)

    def sorted_edges(self):
        return sorted(self.edges)


def compute_h_matrix(t: Topology):
    a = t.adjacency
    n = t.n_agents
    h = -a[1:, 1:].copy()
    for i in range(1, n + 1):
        h[i - 1, i - 1] = a[i, :].sum()
    return h


def _reachable_from_root(t: Topology):
    seen = {0}
    queue = deque([0])
    out = {}
    for j, i in t.edges:
        out.setdefault(j, []).append(i)
    while queue:
        node = queue.popleft()
        for nxt in out.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def check_assumptions(t: Topology):
    """Spanning tree rooted at node 0, undirected agent subgraph, H positive definite."""
    spanning = len(_reachable_from_root(t)) == t.n_agents + 1
    sub = {(j, i) for j, i in t.edges if j != 0}
    undirected = all((i, j) in sub for j, i in sub)
    h = compute_h_matrix(t)
    try:
        pd = linalg.is_positive_definite(h)
    except linalg.DomainError:
        pd = False
    return {
        "spanning_tree_rooted_at_0": spanning,
        "subgraph_undirected": undirected,
        "h_positive_definite": pd,
    }
