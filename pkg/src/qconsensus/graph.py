"""Undirected communication graphs and Laplacian spectra."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

CONNECTIVITY_TOL = 1e-9


class GraphError(ValueError):
    """Invalid graph construction or a spectral query on an unsuitable graph."""


@dataclass(frozen=True)
class Graph:
    """Undirected 0/1 graph on agents ``0 .. n_agents-1``.

    Construct with :func:`from_edge_list` (1-based indices, as the config
    files use) or :meth:`from_adjacency`.
    """

    adjacency: np.ndarray
    neighbors: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise GraphError(f"adjacency must be a nonempty square matrix, got shape {a.shape}")
        if not np.all((a == 0) | (a == 1)):
            raise GraphError("only 0/1 edge weights are supported")
        if not np.array_equal(a, a.T):
            raise GraphError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise GraphError("self-loops are not allowed")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        nbrs = tuple(tuple(int(j) for j in np.flatnonzero(row)) for row in a)
        object.__setattr__(self, "neighbors", nbrs)

    @classmethod
    def from_adjacency(cls, adjacency) -> "Graph":
        return cls(np.asarray(adjacency))

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edges(self) -> list[tuple[int, int]]:
        """Edges as sorted 1-based pairs (the config-file convention)."""
        n = self.n_agents
        return [(i + 1, j + 1) for i in range(n) for j in range(i + 1, n) if self.adjacency[i, j]]

    def laplacian(self) -> np.ndarray:
        return np.diag(self.degrees) - self.adjacency

    def is_connected_bfs(self) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j in self.neighbors[i]:
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
        return len(seen) == self.n_agents

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.adjacency.tobytes())


def from_edge_list(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Build a graph from 1-based index pairs.

    >>> from_edge_list(2, [(1, 2)]).adjacency.tolist()
    [[0.0, 1.0], [1.0, 0.0]]
    """
    if int(n) != n or n < 1:
        raise GraphError(f"number of agents must be a positive integer, got {n!r}")
    n = int(n)
    a = np.zeros((n, n))
    for pair in edges:
        if len(pair) != 2:
            raise GraphError(f"edge {pair!r} is not a pair")
        i, j = (int(v) for v in pair)
        for v in (i, j):
            if not 1 <= v <= n:
                raise GraphError(f"edge {pair!r}: index {v} outside [1, {n}]")
        if i == j:
            raise GraphError(f"edge {pair!r} is a self-loop")
        a[i - 1, j - 1] = a[j - 1, i - 1] = 1.0
    return Graph(a)


def cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError("a cycle needs at least 3 nodes")
    return from_edge_list(n, [(i, i % n + 1) for i in range(1, n + 1)])


def path(n: int) -> Graph:
    return from_edge_list(n, [(i, i + 1) for i in range(1, n)])


def complete(n: int) -> Graph:
    return from_edge_list(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def random_connected(n: int, rng: np.random.Generator, p: float = 0.4) -> Graph:
    """Erdős–Rényi draw, resampled until connected.

    ``n == 1`` returns the single isolated node (trivially connected).
    """
    while True:
        upper = np.triu(rng.random((n, n)) < p, k=1)
        g = Graph((upper | upper.T).astype(float))
        if g.is_connected_bfs():
            return g


@dataclass(frozen=True)
class SpectralData:
    laplacian: np.ndarray
    eigenvalues: np.ndarray
    max_degree: int
    connected: bool

    @property
    def n_agents(self) -> int:
        return len(self.eigenvalues)

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1]) if self.n_agents > 1 else 0.0

    @property
    def lambdaN(self) -> float:
        return float(self.eigenvalues[-1])


def spectral(g: Graph) -> SpectralData:
    lap = g.laplacian()
    # eigvalsh returns ascending order
    eig = np.linalg.eigvalsh(lap)
    eig[0] = 0.0 if abs(eig[0]) < CONNECTIVITY_TOL else eig[0]
    connected = g.n_agents == 1 or eig[1] > CONNECTIVITY_TOL
    if connected != g.is_connected_bfs():
        raise RuntimeError("spectral and BFS connectivity tests disagree")
    lap.setflags(write=False)
    eig.setflags(write=False)
    return SpectralData(laplacian=lap, eigenvalues=eig,
                        max_degree=int(g.degrees.max()), connected=bool(connected))


def rho_h(s: SpectralData, T: float) -> float:
    """Per-round contraction factor ``max_{i>=2} |1 - T*lambda_i|``."""
    if not s.connected:
        raise GraphError("rho_h is only defined for connected graphs")
    if not T > 0:
        raise GraphError(f"sampling period must be positive, got {T}")
    if s.n_agents == 1:
        return 0.0
    return float(np.max(np.abs(1.0 - T * s.eigenvalues[1:])))
