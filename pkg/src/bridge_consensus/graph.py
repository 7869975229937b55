"""Communication topologies, switching schedules and one-round weight matrices.

Node ids are 1-based everywhere in the public API. An edge ``(j, i)`` means
node ``j`` transmits to node ``i``, so ``A[i, j] = 1`` in the adjacency matrix
(0-based array indices ``i - 1``, ``j - 1``).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import MetropolisOnDirected

Edge = tuple[int, int]


@dataclass(frozen=True)
class Topology:
    """One snapshot of the directed communication graph."""

    n: int
    edges: frozenset[Edge] = field(default_factory=frozenset)
    undirected: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"node count must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        edges = frozenset((int(j), int(i)) for j, i in self.edges)
        for j, i in edges:
            if not (1 <= j <= self.n and 1 <= i <= self.n):
                raise ValueError(f"edge ({j}, {i}) has a node outside 1..{self.n}")
            if i == j:
                raise ValueError(f"self-loop ({j}, {i}) is not allowed")
        if self.undirected:
            missing = [(i, j) for j, i in edges if (i, j) not in edges]
            if missing:
                raise ValueError(f"undirected topology is missing reversed edges {sorted(missing)}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge], undirected: bool = False) -> "Topology":
        """Build a topology, closing ``edges`` under reversal when ``undirected``."""
        edges = {(int(j), int(i)) for j, i in edges}
        if undirected:
            edges |= {(i, j) for j, i in edges}
        return cls(n, frozenset(edges), undirected)

    def in_neighbors(self, i: int) -> list[int]:
        return sorted(j for j, k in self.edges if k == i)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)


@dataclass(frozen=True)
class GraphSchedule:
    """Round-indexed topologies: a list of ``(topology, duration)`` frames.

    With ``periodic`` the frame list repeats forever; otherwise the last frame
    persists after the list is exhausted.
    """

    frames: tuple[tuple[Topology, int], ...]
    periodic: bool = False

    def __post_init__(self):
        frames = tuple((t, int(d)) for t, d in self.frames)
        if not frames:
            raise ValueError("a schedule needs at least one frame")
        sizes = {t.n for t, _ in frames}
        if len(sizes) != 1:
            raise ValueError(f"all frames must share the same node count, got {sorted(sizes)}")
        for _, d in frames:
            if d < 1:
                raise ValueError(f"frame duration must be >= 1, got {d}")
        object.__setattr__(self, "frames", frames)

    @classmethod
    def static(cls, topology: Topology) -> "GraphSchedule":
        return cls(((topology, 1),), periodic=False)

    @property
    def n(self) -> int:
        return self.frames[0][0].n

    @property
    def period(self) -> int:
        """Total rounds covered by one pass over the frame list."""
        return sum(d for _, d in self.frames)

    def frame_index_at(self, tau: int) -> int:
        if tau < 0:
            raise ValueError(f"round index must be >= 0, got {tau}")
        if self.periodic:
            tau %= self.period
        for k, (_, d) in enumerate(self.frames):
            if tau < d:
                return k
            tau -= d
        return len(self.frames) - 1

    def topology_at(self, tau: int) -> Topology:
        return self.frames[self.frame_index_at(tau)][0]


class WeightKind(str, Enum):
    UNIFORM_DEGREE = "uniform_degree"
    METROPOLIS = "metropolis"


@dataclass(frozen=True)
class WeightPolicy:
    """How a topology becomes a row-stochastic update matrix.

    ``d_margin`` is added to the maximal degree for the uniform-degree rule;
    the default of 1 keeps every self-weight strictly positive.
    """

    kind: WeightKind = WeightKind.UNIFORM_DEGREE
    d_margin: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", WeightKind(self.kind))
        if int(self.d_margin) != self.d_margin or self.d_margin < 0:
            raise ValueError(f"d_margin must be a nonnegative integer, got {self.d_margin!r}")
        object.__setattr__(self, "d_margin", int(self.d_margin))

    def check(self, t: Topology) -> None:
        if self.kind is WeightKind.METROPOLIS and not t.undirected:
            raise MetropolisOnDirected("Metropolis weights require an undirected topology")


def adjacency_matrix(t: Topology) -> np.ndarray:
    """0/1 integer matrix with ``A[i-1, j-1] = 1`` iff ``(j, i)`` is an edge."""
    A = np.zeros((t.n, t.n), dtype=np.int64)
    for j, i in t.edges:
        A[i - 1, j - 1] = 1
    return A


def laplacian(t: Topology) -> np.ndarray:
    A = adjacency_matrix(t)
    return np.diag(A.sum(axis=1)) - A


def max_degree(t: Topology) -> int:
    return int(np.diag(laplacian(t)).max())


def is_balanced(t: Topology) -> bool:
    A = adjacency_matrix(t)
    return bool(np.array_equal(A.sum(axis=1), A.sum(axis=0)))


def _reaches_all(n: int, succ: list[list[int]]) -> bool:
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in succ[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return all(seen)


def union_strongly_connected(s: GraphSchedule, tau0: int, T: int) -> bool:
    """True iff the union of edge sets over rounds ``tau0 .. tau0 + T`` is strongly connected.

    Only distinct frames are visited, so long windows cost at most one pass
    over the schedule (plus the persisting tail frame).
    """
    if T < 0:
        raise ValueError(f"window length must be >= 0, got {T}")
    n = s.n
    if n == 1:
        return True
    seen_frames: set[int] = set()
    tau = tau0
    end = tau0 + T
    while tau <= end:
        k = s.frame_index_at(tau)
        seen_frames.add(k)
        if len(seen_frames) == len(s.frames):
            break
        if not s.periodic and k == len(s.frames) - 1:
            break
        tau += 1
    union: set[Edge] = set()
    for k in seen_frames:
        union |= s.frames[k][0].edges
    fwd: list[list[int]] = [[] for _ in range(n)]
    bwd: list[list[int]] = [[] for _ in range(n)]
    for j, i in union:
        fwd[j - 1].append(i - 1)
        bwd[i - 1].append(j - 1)
    # strongly connected iff node 1 reaches everyone and everyone reaches node 1
    return _reaches_all(n, fwd) and _reaches_all(n, bwd)


def _uniform_degree_psi(t: Topology, d_margin: int) -> np.ndarray:
    L = laplacian(t)
    d = int(L.diagonal().max()) + d_margin
    if d == 0:
        return np.eye(t.n)
    return np.eye(t.n) - L / d


def _metropolis_psi(t: Topology) -> np.ndarray:
    A = adjacency_matrix(t)
    deg = A.sum(axis=1)
    W = np.zeros((t.n, t.n))
    for j, i in t.edges:
        W[i - 1, j - 1] = 1.0 / (1 + max(deg[i - 1], deg[j - 1]))
    np.fill_diagonal(W, 1.0 - W.sum(axis=1))
    return W


@lru_cache(maxsize=256)
def _psi_cached(t: Topology, policy: WeightPolicy) -> np.ndarray:
    if policy.kind is WeightKind.METROPOLIS:
        W = _metropolis_psi(t)
    else:
        W = _uniform_degree_psi(t, policy.d_margin)
    W.setflags(write=False)
    return W


def psi(t: Topology, policy: WeightPolicy | None = None) -> np.ndarray:
    """Row-stochastic one-round update matrix for ``t`` under ``policy``.

    Uniform degree: ``I - L / d`` with ``d = max_degree(t) + d_margin`` (an
    edgeless frame gives the identity). Metropolis: ``1 / (1 + max(deg_i, deg_j))``
    on each edge, remainder on the diagonal. The returned array is read-only.
    """
    policy = policy or WeightPolicy()
    policy.check(t)
    return _psi_cached(t, policy)
