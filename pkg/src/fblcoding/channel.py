"""Distributions, channels, costs and the basic information measures.

All logarithms are natural; quantities are in nats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import (
    AbsoluteContinuityViolation,
    DimensionMismatch,
    DomainError,
    EmptyFeasibleSet,
    ValidationError,
)

STOCHASTIC_TOL = 1e-12

ArrayLike = Union[Sequence[float], np.ndarray]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """A distribution on {0, ..., alphabet_size - 1}."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError("a probability vector must be a non-empty 1-D array")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValidationError("probabilities must be finite and non-negative")
        total = p.sum()
        if abs(total - 1.0) > STOCHASTIC_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", _frozen(p / total))

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __repr__(self) -> str:
        return f"ProbabilityVector({self.probs.tolist()})"

    @classmethod
    def uniform(cls, size: int) -> "ProbabilityVector":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, size: int, index: int) -> "ProbabilityVector":
        p = np.zeros(size)
        p[index] = 1.0
        return cls(p)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)


@dataclass(frozen=True, eq=False)
class DiscreteChannel:
    """Row-stochastic matrix W[x, y] = W(y|x)."""

    matrix: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=float)
        if w.ndim != 2 or w.shape[0] == 0 or w.shape[1] == 0:
            raise ValidationError("a channel matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("channel entries must be finite and non-negative")
        sums = w.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL)
        if bad.size:
            raise ValidationError(f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
        object.__setattr__(self, "matrix", _frozen(w / sums[:, None]))

    @property
    def input_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def output_size(self) -> int:
        return self.matrix.shape[1]

    def row(self, x: int) -> ProbabilityVector:
        return ProbabilityVector(self.matrix[x])

    def __repr__(self) -> str:
        return f"DiscreteChannel({self.input_size}x{self.output_size})"

    # -- common constructions -------------------------------------------------

    @classmethod
    def identity(cls, size: int) -> "DiscreteChannel":
        return cls(np.eye(size))

    @classmethod
    def bsc(cls, p: float) -> "DiscreteChannel":
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"crossover probability {p} outside [0, 1]")
        return cls(np.array([[1.0 - p, p], [p, 1.0 - p]]))

    @classmethod
    def bec(cls, eps: float) -> "DiscreteChannel":
        """Binary erasure channel with outputs (0, erasure, 1)."""
        if not 0.0 <= eps <= 1.0:
            raise DomainError(f"erasure probability {eps} outside [0, 1]")
        return cls(np.array([[1.0 - eps, eps, 0.0], [0.0, eps, 1.0 - eps]]))

    # -- JSON ----------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size,
            "output_size": self.output_size,
            "matrix": self.matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteChannel":
        try:
            matrix = np.asarray(data["matrix"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed channel JSON: {exc}") from exc
        if matrix.ndim != 2:
            raise ValidationError("channel 'matrix' must be a list of rows")
        for key, actual in (("input_size", matrix.shape[0]), ("output_size", matrix.shape[1])):
            if key in data and int(data[key]) != actual:
                raise DimensionMismatch(f"{key}={data[key]} but matrix has {actual}")
        return cls(matrix)

    @classmethod
    def from_json(cls, text: str) -> "DiscreteChannel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class CostFunction:
    """Per-letter cost c(x) together with the per-letter budget K."""

    costs: np.ndarray
    cap: float

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=float)
        if c.ndim != 1 or c.size == 0 or not np.all(np.isfinite(c)):
            raise ValidationError("costs must be a non-empty vector of finite reals")
        cap = float(self.cap)
        if not np.isfinite(cap):
            raise ValidationError("cost cap must be finite")
        if c.min() > cap:
            raise EmptyFeasibleSet(f"min cost {c.min()} exceeds cap {cap}")
        object.__setattr__(self, "costs", _frozen(c))
        object.__setattr__(self, "cap", cap)

    def expected(self, p: ArrayLike) -> float:
        return float(np.dot(_probs(p), self.costs))

    def to_dict(self) -> dict:
        return {"costs": self.costs.tolist(), "cap": self.cap}

    @classmethod
    def from_dict(cls, data: dict) -> "CostFunction":
        try:
            return cls(data["costs"], data["cap"])
        except KeyError as exc:
            raise ValidationError(f"cost JSON missing {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "CostFunction":
        return cls.from_dict(json.loads(text))


def _probs(p) -> np.ndarray:
    if isinstance(p, ProbabilityVector):
        return p.probs
    return ProbabilityVector(p).probs


def _matrix(w) -> np.ndarray:
    if isinstance(w, DiscreteChannel):
        return w.matrix
    return DiscreteChannel(w).matrix


def xlogy_ratio(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise p * ln(p / q) with 0 ln(0/q) = 0; caller guarantees q > 0 where p > 0."""
    out = np.zeros(np.broadcast(p, q).shape)
    p_b, q_b = np.broadcast_arrays(p, q)
    mask = p_b > 0
    with np.errstate(divide="ignore"):
        out[mask] = p_b[mask] * np.log(p_b[mask] / q_b[mask])
    return out


def log_ratio(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """ln(p / q) on the support of p, 0 elsewhere (those entries carry zero weight)."""
    p_b, q_b = np.broadcast_arrays(p, q)
    out = np.zeros(p_b.shape)
    mask = p_b > 0
    with np.errstate(divide="ignore"):
        out[mask] = np.log(p_b[mask] / q_b[mask])
    return out


def kl_divergence(p, q) -> float:
    """D(p || q) in nats."""
    p, q = _probs(p), _probs(q)
    if p.shape != q.shape:
        raise DimensionMismatch(f"alphabet sizes differ: {p.size} vs {q.size}")
    if np.any((p > 0) & (q == 0)):
        raise AbsoluteContinuityViolation("p puts mass where q has none")
    return max(float(xlogy_ratio(p, q).sum()), 0.0)


def row_divergences(w, q) -> np.ndarray:
    """Vector of D(W_x || q) over inputs x; +inf where W_x escapes support(q)."""
    w, q = _matrix(w), np.asarray(q, dtype=float)
    if w.shape[1] != q.size:
        raise DimensionMismatch(f"channel has {w.shape[1]} outputs, q has {q.size}")
    out = xlogy_ratio(w, q[None, :]).sum(axis=1)
    escaped = np.any((w > 0) & (q[None, :] == 0), axis=1)
    out[escaped] = np.inf
    return out


def output_distribution(w, p) -> ProbabilityVector:
    """W_P(y) = sum_x P(x) W(y|x)."""
    w, p = _matrix(w), _probs(p)
    if p.size != w.shape[0]:
        raise DimensionMismatch(f"channel has {w.shape[0]} inputs, P has {p.size}")
    return ProbabilityVector(p @ w)


def mutual_information(w, p) -> float:
    """I(P, W) = sum_x P(x) D(W_x || W_P)."""
    w, p = _matrix(w), _probs(p)
    q = output_distribution(w, p).probs
    mask = p > 0
    value = float(np.dot(p[mask], xlogy_ratio(w[mask], q[None, :]).sum(axis=1)))
    return max(value, 0.0)


def product_channel(w1, w2) -> DiscreteChannel:
    """(W x W')_{x,x'}(y,y') = W_x(y) W'_{x'}(y') with row-major index pairing."""
    return DiscreteChannel(np.kron(_matrix(w1), _matrix(w2)))


def product_distribution(p1, p2) -> ProbabilityVector:
    return ProbabilityVector(np.kron(_probs(p1), _probs(p2)))


def product_cost(c1: CostFunction, c2: CostFunction) -> CostFunction:
    """Additive cost (c + c')(x, x') = c(x) + c'(x') with budget K + K'."""
    costs = (c1.costs[:, None] + c2.costs[None, :]).ravel()
    return CostFunction(costs, c1.cap + c2.cap)


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy argument {x} outside [0, 1]")
    return float(-xlogy_ratio(np.array([x, 1.0 - x]), np.ones(2)).sum())


def binary_divergence(x: float, y: float) -> float:
    """d(x || y) = x ln(x/y) + (1-x) ln((1-x)/(1-y))."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"first argument {x} outside [0, 1]")
    if not 0.0 < y < 1.0:
        raise DomainError(f"second argument {y} outside (0, 1)")
    return max(float(xlogy_ratio(np.array([x, 1.0 - x]), np.array([y, 1.0 - y])).sum()), 0.0)


def entropy(p) -> float:
    p = _probs(p)
    return float(-xlogy_ratio(p, np.ones_like(p)).sum())
