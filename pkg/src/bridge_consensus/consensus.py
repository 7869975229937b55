"""Discrete-time consensus filter: per-node update, stacked update and a runner.

States are handled as an ``(n, m)`` float array, one row per node. Every
weighted sum starts from ``+0.0`` and adds terms in ascending node index, so
``global_step`` and ``n`` calls to ``local_update`` agree bit for bit:
zero-weight terms contribute ``±0.0`` and cannot change a running sum that
never holds ``-0.0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch
from .graph import GraphSchedule, WeightPolicy, psi as psi_matrix

WEIGHT_SUM_TOL = 1e-15


def as_states(states) -> np.ndarray:
    """Coerce a list of state vectors (or scalars) into a finite ``(n, m)`` float array."""
    try:
        X = np.array(states, dtype=float)
    except ValueError as exc:
        raise DimensionMismatch(f"states do not share one dimension: {exc}") from None
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionMismatch(f"expected n >= 1 states of dimension m >= 1, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("consensus states must be finite")
    return X


@dataclass(frozen=True)
class RoundInput:
    """What node ``node`` sees in one round.

    ``weights[0]`` applies to ``self_state`` and ``weights[k]`` to the k-th
    entry of ``neighbor_states`` (a list of ``(id, state)`` in-neighbors).
    """

    node: int
    self_state: np.ndarray
    neighbor_states: tuple[tuple[int, np.ndarray], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        ids = [j for j, _ in self.neighbor_states]
        if len(set(ids)) != len(ids) or self.node in ids:
            raise ValueError("neighbor ids must be distinct and exclude the node itself")
        if len(self.weights) != len(ids) + 1:
            raise ValueError(f"expected {len(ids) + 1} weights, got {len(self.weights)}")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must be nonnegative and sum to 1, got {self.weights}")

    @classmethod
    def from_psi(cls, i: int, states, psi: np.ndarray) -> "RoundInput":
        """Gather node ``i``'s (1-based) input from a stacked state array and its row of ``psi``."""
        X = as_states(states)
        row = np.asarray(psi)[i - 1]
        nbrs = tuple((j + 1, X[j]) for j in range(len(row)) if j != i - 1 and row[j] != 0)
        weights = (float(row[i - 1]),) + tuple(float(row[j - 1]) for j, _ in nbrs)
        return cls(i, X[i - 1], nbrs, weights)


def _weighted_sum(terms) -> np.ndarray:
    acc = None
    for w, x in terms:
        acc = np.zeros_like(x) if acc is None else acc
        acc += w * x
    return acc


def local_update(inp: RoundInput) -> np.ndarray:
    """Convex combination of a node's own state and its in-neighbors' states."""
    x_self = np.atleast_1d(np.asarray(inp.self_state, dtype=float))
    terms = [(inp.node, inp.weights[0], x_self)]
    for (j, x), w in zip(inp.neighbor_states, inp.weights[1:]):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != x_self.shape:
            raise DimensionMismatch(f"neighbor {j} has shape {x.shape}, expected {x_self.shape}")
        terms.append((j, w, x))
    terms.sort(key=lambda t: t[0])
    return _weighted_sum((w, x) for _, w, x in terms)


def global_step(states, psi: np.ndarray) -> np.ndarray:
    """One synchronous round for all nodes: row ``i`` becomes ``sum_j psi[i, j] * states[j]``."""
    X = as_states(states)
    P = np.asarray(psi, dtype=float)
    n = X.shape[0]
    if P.shape != (n, n):
        raise DimensionMismatch(f"psi has shape {P.shape} but there are {n} states")
    out = np.zeros_like(X)
    for j in range(n):
        out += P[:, j : j + 1] * X[j]
    return out


def disagreement(states) -> float:
    """Largest Euclidean distance of any node's state from the all-node mean."""
    X = as_states(states)
    return float(np.max(np.linalg.norm(X - X.mean(axis=0), axis=1)))


class RunOutcome(NamedTuple):
    states: np.ndarray
    rounds: int
    converged: bool


def run(
    states,
    schedule: GraphSchedule,
    policy: WeightPolicy | None = None,
    tol: float = 1e-9,
    max_rounds: int = 10_000,
) -> RunOutcome:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_rounds < 0:
        raise ValueError("max_rounds must be >= 0")
    X = as_states(states)
    if X.shape[0] != schedule.n:
        raise DimensionMismatch(f"{X.shape[0]} states for a {schedule.n}-node schedule")
    policy = policy or WeightPolicy()
    tau = 0
    while True:
        if disagreement(X) <= tol:
            return RunOutcome(X, tau, True)
        if tau >= max_rounds:
            return RunOutcome(X, tau, False)
        X = global_step(X, psi_matrix(schedule.topology_at(tau), policy))
        tau += 1


def stacked_oracle_step(states: Sequence, psi: np.ndarray) -> np.ndarray:
    """Dense ``(psi kron I_m) @ vec(states)`` reference for ``global_step``."""
    X = as_states(states)
    n, m = X.shape
    return (np.kron(np.asarray(psi, dtype=float), np.eye(m)) @ X.reshape(n * m)).reshape(n, m)
