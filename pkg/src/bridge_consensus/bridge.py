"""Bridge consensus in information space.

Participating nodes start with information matrix ``C`` and information state
``C @ x0``; non-participating nodes start with zeros. Both quantities are
driven by the same consensus filter, and each node reads its estimate as the
solution of ``Y mu = y``. The ``C`` factors cancel, so the estimate tends to
the plain mean of the participants' initial values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .consensus import global_step
from .errors import DimensionMismatch, MissingValue, NoParticipants, NotPositiveDefinite
from .graph import Topology, adjacency_matrix

DEFAULT_EPS_PD = 1e-9
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class PriorWeight:
    """Symmetric positive-definite weight ``C`` given to every participant."""

    C: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.array(self.C, dtype=float))
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise DimensionMismatch(f"C must be square, got shape {C.shape}")
        if not np.all(np.isfinite(C)) or np.max(np.abs(C - C.T)) > SYMMETRY_TOL:
            raise NotPositiveDefinite("C must be finite and symmetric")
        if np.linalg.eigvalsh(C)[0] <= SYMMETRY_TOL:
            raise NotPositiveDefinite("C must be positive definite")
        C.setflags(write=False)
        object.__setattr__(self, "C", C)

    @classmethod
    def identity(cls, m: int = 1) -> "PriorWeight":
        return cls(np.eye(m))

    @property
    def m(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class InfoPair:
    """A node's information matrix ``Y``, information state ``y`` and participation flag."""

    Y: np.ndarray
    y: np.ndarray
    participating: bool

    @property
    def m(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class Estimate:
    """A node's current estimate; ``mu`` is None while the node holds too little information."""

    mu: Optional[np.ndarray]

    @property
    def defined(self) -> bool:
        return self.mu is not None


UNDEFINED = Estimate(None)


def _vector(x, m=None, what="value") -> np.ndarray:
    v = np.atleast_1d(np.array(x, dtype=float))
    if v.ndim != 1:
        raise DimensionMismatch(f"{what} must be a vector, got shape {v.shape}")
    if m is not None and v.shape[0] != m:
        raise DimensionMismatch(f"{what} has dimension {v.shape[0]}, expected {m}")
    return v


def _participant_values(x0: Sequence, participation: Sequence[bool]) -> list[tuple[int, np.ndarray]]:
    """``(index, value)`` for every participating node, with shared-dimension checks."""
    if len(x0) != len(participation):
        raise DimensionMismatch(f"{len(x0)} values but {len(participation)} participation flags")
    out = []
    m = None
    for i, (x, p) in enumerate(zip(x0, participation)):
        if not p:
            continue
        if x is None:
            raise MissingValue(f"participating node {i + 1} has no initial value")
        v = _vector(x, m, what=f"value of node {i + 1}")
        m = v.shape[0]
        out.append((i, v))
    if not out:
        raise NoParticipants("at least one node must participate")
    return out


def init_information(x0: Sequence, participation: Sequence[bool], prior: PriorWeight | None = None) -> list[InfoPair]:
    """Information-space initialization: ``(C, C x0)`` for participants, ``(0, 0)`` otherwise.

    Values supplied for non-participating nodes are ignored.
    """
    values = dict(_participant_values(x0, participation))
    m = next(iter(values.values())).shape[0]
    prior = prior or PriorWeight.identity(m)
    if prior.m != m:
        raise DimensionMismatch(f"C is {prior.m}x{prior.m} but values have dimension {m}")
    pairs = []
    for i in range(len(participation)):
        if i in values:
            pairs.append(InfoPair(prior.C.copy(), prior.C @ values[i], True))
        else:
            pairs.append(InfoPair(np.zeros((m, m)), np.zeros(m), False))
    return pairs


def stack_pairs(pairs: Sequence[InfoPair]) -> np.ndarray:
    """Row ``i`` is ``[vec(Y_i), y_i]`` so a single filter advances both quantities."""
    m = pairs[0].m
    rows = []
    for k, p in enumerate(pairs):
        if p.Y.shape != (m, m) or p.y.shape != (m,):
            raise DimensionMismatch(f"node {k + 1} has Y {p.Y.shape}, y {p.y.shape}; expected m={m}")
        rows.append(np.concatenate([p.Y.reshape(m * m), p.y]))
    return np.array(rows)


def unstack_pairs(X: np.ndarray, pairs: Sequence[InfoPair]) -> list[InfoPair]:
    m = pairs[0].m
    out = []
    for row, p in zip(X, pairs):
        Y = row[: m * m].reshape(m, m)
        out.append(InfoPair((Y + Y.T) / 2, row[m * m :].copy(), p.participating))
    return out


def bridge_step(pairs: Sequence[InfoPair], psi: np.ndarray) -> list[InfoPair]:
    """Advance the information-matrix and information-state filters by one round with ``psi``."""
    return unstack_pairs(global_step(stack_pairs(pairs), psi), pairs)


def extract_estimate(pair: InfoPair, eps_pd: float = DEFAULT_EPS_PD) -> Estimate:
    """Solve ``Y mu = y`` when ``Y`` is safely positive definite, else Undefined."""
    if eps_pd <= 0:
        raise ValueError("eps_pd must be positive")
    if np.linalg.eigvalsh(pair.Y)[0] <= eps_pd:
        return UNDEFINED
    return Estimate(linalg.cho_solve(linalg.cho_factor(pair.Y), pair.y))


def info_mass(pair: InfoPair, prior: PriorWeight) -> float:
    """Scalar ``a`` with ``Y = a C``, read off as ``trace(Y) / trace(C)``."""
    return float(np.trace(pair.Y) / np.trace(prior.C))


def _spd_factor(R: np.ndarray, what: str):
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise DimensionMismatch(f"{what} must be square, got shape {R.shape}")
    if np.max(np.abs(R - R.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(R))):
        raise NotPositiveDefinite(f"{what} is not symmetric")
    try:
        return linalg.cho_factor(R)
    except linalg.LinAlgError:
        raise NotPositiveDefinite(f"{what} is not positive definite") from None


def ml_mean_oracle(samples: Sequence, covariances: Sequence) -> np.ndarray:
    """Maximum-likelihood common mean of independent Gaussian samples with known covariances.

    Computed in information form: ``(sum R_i^-1)^-1 sum R_i^-1 x_i``, every
    inverse applied through a Cholesky solve.
    """
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    if len(samples) != len(covariances):
        raise DimensionMismatch(f"{len(samples)} samples but {len(covariances)} covariances")
    m = _vector(samples[0]).shape[0]
    Y_sum = np.zeros((m, m))
    y_sum = np.zeros(m)
    for k, (x, R) in enumerate(zip(samples, covariances)):
        x = _vector(x, m, what=f"sample {k + 1}")
        R = np.atleast_2d(np.array(R, dtype=float))
        if R.shape != (m, m):
            raise DimensionMismatch(f"covariance {k + 1} has shape {R.shape}, expected {(m, m)}")
        factor = _spd_factor(R, f"covariance {k + 1}")
        Y_sum += linalg.cho_solve(factor, np.eye(m))
        y_sum += linalg.cho_solve(factor, x)
    Y_sum = (Y_sum + Y_sum.T) / 2
    return linalg.cho_solve(_spd_factor(Y_sum, "summed information"), y_sum)


def participating_average(x0: Sequence, participation: Sequence[bool]) -> np.ndarray:
    values = [v for _, v in _participant_values(x0, participation)]
    return np.mean(values, axis=0)


def naive_init_baseline(x0: Sequence, participation: Sequence[bool], t: Topology) -> list[float]:
    """One synchronous round of the naive seeding scheme the protocol improves upon.

    Each non-participating node adopts the mean of its participating
    in-neighbors' values. At the same time each participant replaces its value
    by the mean over its closed in-neighborhood, counting only nodes that hold
    a value at round 0 (non-participants hold none yet). A non-participant with
    no participating in-neighbor ends at NaN.
    """
    _participant_values(x0, participation)
    if len(x0) != t.n:
        raise DimensionMismatch(f"{len(x0)} values for a {t.n}-node topology")
    vals = [float(_vector(x, 1)[0]) if p else None for x, p in zip(x0, participation)]
    A = adjacency_matrix(t)
    out = []
    for i in range(t.n):
        nbrs = [vals[j] for j in range(t.n) if A[i, j] and vals[j] is not None]
        if vals[i] is None:
            out.append(sum(nbrs) / len(nbrs) if nbrs else float("nan"))
        else:
            closed = [vals[i]] + nbrs
            out.append(sum(closed) / len(closed))
    return out
