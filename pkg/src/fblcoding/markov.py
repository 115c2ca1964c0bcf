"""Additive Markov noise on Z_d: entropy rate, asymptotic variance, capacity,
second-order rate and the Markov Gallager function."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .channel import ProbabilityVector, log_ratio
from .errors import DomainError, ValidationError
from .normal import normal_cdf, normal_quantile

DEGENERATE_VARIANCE = 1e-14


@dataclass(frozen=True, eq=False)
class MarkovNoise:
    """Irreducible transition matrix Q[x, y] = Q(y|x) on {0, ..., d-1}."""

    transition: np.ndarray

    def __post_init__(self):
        q = np.array(self.transition, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
            raise ValidationError("transition matrix must be square")
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise ValidationError("transition entries must be finite and non-negative")
        sums = q.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise ValidationError("transition rows must sum to 1")
        q /= sums[:, None]
        d = q.shape[0]
        reach = np.linalg.matrix_power(np.eye(d) + (q > 0), d)
        if np.any(reach <= 0):
            raise ValidationError("transition matrix is not irreducible")
        q.setflags(write=False)
        object.__setattr__(self, "transition", q)
        object.__setattr__(self, "_stationary", _stationary(q))

    @property
    def d(self) -> int:
        return self.transition.shape[0]

    @property
    def stationary(self) -> ProbabilityVector:
        return ProbabilityVector(self._stationary)

    @classmethod
    def from_dict(cls, data: dict) -> "MarkovNoise":
        try:
            noise = cls(data["transition"])
        except KeyError as exc:
            raise ValidationError(f"Markov JSON missing {exc}") from exc
        if "d" in data and int(data["d"]) != noise.d:
            raise ValidationError(f"d={data['d']} but transition is {noise.d}x{noise.d}")
        return noise

    @classmethod
    def from_json(cls, text: str) -> "MarkovNoise":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {"d": self.d, "transition": self.transition.tolist()}


def _stationary(q: np.ndarray) -> np.ndarray:
    d = q.shape[0]
    system = np.vstack([q.T - np.eye(d), np.ones((1, d))])
    rhs = np.zeros(d + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()
    if np.max(np.abs(pi @ q - pi)) > 1e-10:
        raise ValidationError("could not resolve a stationary distribution")
    return pi


def _centred_surprisal(noise: MarkovNoise):
    q = noise.transition
    pi = noise._stationary
    surprisal = -log_ratio(q, np.ones_like(q))
    row_entropy = np.sum(q * surprisal, axis=1)
    h = float(pi @ row_entropy)
    return q, pi, surprisal - h, row_entropy - h, h


def entropy_rate(noise: MarkovNoise) -> float:
    """H(Q) = sum_x P_Q(x) H(Q_x) in nats."""
    return _centred_surprisal(noise)[4]


def markov_variance(noise: MarkovNoise, lag_cutoff: Optional[int] = 1) -> float:
    """Variance constant of -ln Q^n(x) / sqrt(n).

    ``lag_cutoff=1`` is the two-term expression: lag-0 variance plus twice
    the lag-1 covariance of g(X_k, X_{k+1}) = -ln Q(X_{k+1}|X_k) - H(Q).
    Larger cutoffs add covariances up to that lag; ``None`` sums every lag
    through the fundamental matrix, which is the CLT variance of the chain.
    """
    if lag_cutoff is not None and lag_cutoff < 1:
        raise DomainError("lag_cutoff must be >= 1 or None")
    q, pi, g, row_mean, _ = _centred_surprisal(noise)
    joint = pi[:, None] * q
    total = float(np.sum(joint * g * g))
    # The lag-j covariance is E[g(X_k, X_{k+1}) (Q^{j-1} row_mean)(X_{k+1})].
    if lag_cutoff is None:
        d = noise.d
        fundamental = np.linalg.inv(np.eye(d) - q + np.outer(np.ones(d), pi))
        tail = fundamental @ row_mean
        total += 2.0 * float(np.sum(joint * g * tail[None, :]))
    else:
        propagated = row_mean.copy()
        for _ in range(lag_cutoff):
            total += 2.0 * float(np.sum(joint * g * propagated[None, :]))
            propagated = q @ propagated
    return max(total, 0.0)


def exact_block_variance(noise: MarkovNoise, n: int) -> float:
    """Var(-ln Q^n(X)) / n exactly, for a stationary chain of n transitions."""
    q, pi, g, row_mean, _ = _centred_surprisal(noise)
    joint = pi[:, None] * q
    total = n * float(np.sum(joint * g * g))
    propagated = row_mean.copy()
    for lag in range(1, n):
        total += 2.0 * (n - lag) * float(np.sum(joint * g * propagated[None, :]))
        propagated = q @ propagated
    return total / n


def markov_capacity(noise: MarkovNoise) -> float:
    """ln d - H(Q)."""
    return max(math.log(noise.d) - entropy_rate(noise), 0.0)


def markov_second_order(noise: MarkovNoise, eps: float, lag_cutoff: Optional[int] = 1) -> float:
    """sqrt(V(Q)) G^{-1}(eps); signed infinity when V(Q) vanishes and eps != 1/2."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    v = markov_variance(noise, lag_cutoff)
    if v < DEGENERATE_VARIANCE:
        return 0.0 if eps == 0.5 else math.copysign(math.inf, eps - 0.5)
    return math.sqrt(v) * normal_quantile(eps)


def markov_error(noise: MarkovNoise, a: float, lag_cutoff: Optional[int] = 1) -> float:
    """G(a / sqrt(V(Q)))."""
    v = markov_variance(noise, lag_cutoff)
    if v < DEGENERATE_VARIANCE:
        return 0.5 if a == 0 else float(a > 0)
    return normal_cdf(a / math.sqrt(v))


# ---------------------------------------------------------------------------
# Gallager function for Markov noise
# ---------------------------------------------------------------------------


def _log_apply_power(v: np.ndarray, m: np.ndarray, k: int) -> float:
    """ln(v^T M^k 1) by binary exponentiation with per-step rescaling."""
    log_scale = 0.0
    vec = v.copy()
    base = m.copy()
    base_log = 0.0
    while k > 0:
        if k & 1:
            vec = vec @ base
            s = vec.sum()
            vec /= s
            log_scale += math.log(s) + base_log
        k >>= 1
        if k:
            base = base @ base
            top = base.max()
            base /= top
            base_log = 2.0 * base_log + math.log(top)
    return log_scale + math.log(vec.sum())


def _initial_law(noise: MarkovNoise, initial: Union[str, np.ndarray]) -> np.ndarray:
    if isinstance(initial, str):
        if initial == "stationary":
            return noise._stationary
        if initial == "uniform":
            return np.full(noise.d, 1.0 / noise.d)
        raise ValueError(f"unknown initial law {initial!r}")
    return ProbabilityVector(initial).probs


def log_powered_sum(noise: MarkovNoise, n: int, alpha: float,
                    initial: Union[str, np.ndarray] = "stationary") -> float:
    """ln sum over x_1..x_n of Q^n(x)^alpha, with x_1 drawn from ``initial``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    q = noise.transition
    powered = np.where(q > 0, q, 0.0) ** alpha
    start = _initial_law(noise, initial) ** alpha
    if n == 1:
        return math.log(start.sum())
    return _log_apply_power(start, powered, n - 1)


def markov_gallager_psi(noise: MarkovNoise, n: int, s: float,
                        initial: Union[str, np.ndarray] = "stationary") -> float:
    """psi_{Q,n}(s) = -s ln d + (1+s)/n ln sum_x Q^n(x)^{1/(1+s)}.

    Sequences start from ``initial`` (the stationary law by default, which
    makes the i.i.d. case factor exactly into the memoryless psi).
    """
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    if s == 0.0:
        return 0.0
    return -s * math.log(noise.d) + (1.0 + s) / n * log_powered_sum(noise, n, 1.0 / (1.0 + s),
                                                                      initial)


def markov_scaled_gallager_min(noise: MarkovNoise, r2: float, n: int, tol: float = 1e-12,
                               initial: Union[str, np.ndarray] = "stationary") -> float:
    """n * min_{0<=s<=1} (C s + r2/sqrt(n) s + psi_{Q,n}(s)); tends to -r2^2/(2V)."""
    from .gallager import golden_section

    cap = markov_capacity(noise)
    slope = cap + r2 / math.sqrt(n)

    def f(s):
        return slope * s + markov_gallager_psi(noise, n, s, initial)

    s_star, value = golden_section(f, 0.0, 1.0, tol)
    return n * value


# ---------------------------------------------------------------------------
# Monte-Carlo validation
# ---------------------------------------------------------------------------


def sample_block_surprisal(noise: MarkovNoise, n: int, replicas: int, seed: int) -> np.ndarray:
    """Draw -ln Q^n(x) for ``replicas`` stationary chains of n transitions."""
    rng = np.random.default_rng(seed)
    q = noise.transition
    cum = np.cumsum(q, axis=1)
    cum[:, -1] = 1.0
    surprisal = -log_ratio(q, np.ones_like(q))
    state = rng.choice(noise.d, size=replicas, p=noise._stationary)
    totals = np.zeros(replicas)
    chunk = 4096
    done = 0
    while done < n:
        steps = min(chunk, n - done)
        u = rng.random((steps, replicas))
        for k in range(steps):
            nxt = np.sum(u[k][:, None] > cum[state], axis=1)
            totals += surprisal[state, nxt]
            state = nxt
        done += steps
    return totals


def monte_carlo_variance(noise: MarkovNoise, n: int = 100_000, replicas: int = 200,
                         seed: int = 0) -> tuple:
    """Empirical Var(-ln Q^n)/n and its standard error from the sample fourth moment."""
    values = sample_block_surprisal(noise, n, replicas, seed)
    centred = values - values.mean()
    var = float(np.sum(centred ** 2) / (replicas - 1))
    m4 = float(np.mean(centred ** 4))
    se = math.sqrt(max(m4 - var * var, 0.0) / replicas)
    return var / n, se / n
