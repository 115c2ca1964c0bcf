"""Channel capacity by Blahut-Arimoto and the set of capacity-achieving inputs.

Every iterate P_t yields a certified bracket

    I(P_t, W) <= C <= max_x D(W_x || W_{P_t}),

so the reported gap is a true duality gap, not a step-size heuristic. The
cost-constrained variant runs the same iteration on the Lagrangian
I(P, W) - lam * E_P c and bisects on lam.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import (
    CostFunction,
    DiscreteChannel,
    ProbabilityVector,
    _matrix,
    mutual_information,
    row_divergences,
)
from .errors import EmptyFeasibleSet, NonConvergence, SupportAmbiguity, ValidationError

DEFAULT_TOL = 1e-10
DEFAULT_SUPPORT_TOL = 1e-8
MAX_ITERATIONS = 100_000
MAX_ENUMERATED_SUPPORT = 20
POLISH_TOL = 1e-13
# Largest step multiplier the accelerated update will try.
MAX_STEP = 1e6


@dataclass(frozen=True)
class CapacityReport:
    capacity: float
    q_m: ProbabilityVector
    achiever: ProbabilityVector
    iterations: int
    gap: float
    # Lagrange multiplier of the cost constraint: 0 when slack or absent,
    # inf when the budget equals the minimum cost.
    multiplier: float = 0.0
    cost: Optional[CostFunction] = None

    def to_dict(self) -> dict:
        return {
            "capacity_nats": self.capacity,
            "q_m": self.q_m.probs.tolist(),
            "achiever": self.achiever.probs.tolist(),
            "gap": self.gap,
            "iterations": self.iterations,
            "multiplier": None if math.isinf(self.multiplier) else self.multiplier,
        }


@dataclass(frozen=True)
class _Iterate:
    p: np.ndarray
    upper: float  # max_x [D(W_x||W_P) - lam c(x)]
    lower: float  # I(P,W) - lam E_P c
    iterations: int

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def _blahut_arimoto(w: np.ndarray, lam: float, costs: Optional[np.ndarray],
                    p0: np.ndarray, tol: float, max_iter: int,
                    strict: bool = True) -> _Iterate:
    """Iterate P <- P exp(mu * score) / Z until the bracket closes to ``tol``.

    mu = 1 is the classical update, which never lowers the objective. Longer
    steps are tried first and kept only when they raise the objective, so
    nearly useless channels (scores of order 1e-6) still converge quickly.
    With ``strict=False`` the last iterate is returned instead of raising.
    """
    penalty = 0.0 if costs is None or lam == 0.0 else lam * costs

    def evaluate(log_p):
        p = np.exp(log_p)
        score = row_divergences(w, p @ w) - penalty
        return p, score, float(score.max()), float(np.dot(p, score))

    def step(log_p, score, mu):
        out = np.maximum(log_p + mu * score, -700.0)
        return out - np.logaddexp.reduce(out)

    log_p = np.log(np.maximum(p0, 1e-300))
    log_p -= np.logaddexp.reduce(log_p)
    p, score, upper, lower = evaluate(log_p)
    mu = 1.0
    for it in range(1, max_iter + 1):
        if upper - lower <= tol:
            break
        if mu > 1.0:
            trial = step(log_p, score, mu)
            state = evaluate(trial)
            if state[3] > lower:
                log_p, (p, score, upper, lower) = trial, state
                mu = min(2.0 * mu, MAX_STEP)
                continue
            mu = max(1.0, mu / 4.0)
        log_p = step(log_p, score, 1.0)
        p, score, upper, lower = evaluate(log_p)
        mu = min(2.0 * mu, MAX_STEP)
    else:
        if strict:
            raise NonConvergence(
                f"Blahut-Arimoto gap {upper - lower:.3e} > {tol:.1e} after {max_iter} iterations")
    return _Iterate(p, upper, lower, it)


def _polished(w, lam, costs, first: _Iterate) -> _Iterate:
    """Spend a bounded number of extra iterations sharpening Q_M toward POLISH_TOL.

    The polytope construction anchors on Q_M, so a few more digits there are
    worth far more than the extra iterations cost.
    """
    if first.gap <= POLISH_TOL:
        return first
    extra = _blahut_arimoto(w, lam, costs, first.p, POLISH_TOL, 2 * first.iterations + 1000,
                            strict=False)
    if extra.gap > first.gap:
        return first
    return _Iterate(extra.p, extra.upper, extra.lower, first.iterations + extra.iterations)


def capacity(w, tol: float = DEFAULT_TOL, max_iterations: int = MAX_ITERATIONS) -> CapacityReport:
    """Unconstrained capacity C = max_P I(P, W) in nats."""
    if tol <= 0:
        raise ValidationError("tol must be positive")
    w = _matrix(w)
    p0 = np.full(w.shape[0], 1.0 / w.shape[0])
    it = _blahut_arimoto(w, 0.0, None, p0, tol, max_iterations)
    it = _polished(w, 0.0, None, it)
    p = ProbabilityVector(it.p)
    return CapacityReport(
        capacity=0.5 * (it.upper + it.lower),
        q_m=ProbabilityVector(it.p @ w),
        achiever=p,
        iterations=it.iterations,
        gap=it.gap,
    )


def _restricted_capacity(w, cost: CostFunction, tol, max_iterations) -> CapacityReport:
    """Budget equal to the minimum cost: only the cheapest letters are usable."""
    cheap = np.flatnonzero(cost.costs <= cost.cap)
    sub = capacity(w[cheap], tol, max_iterations)
    p = np.zeros(w.shape[0])
    p[cheap] = sub.achiever.probs
    return CapacityReport(sub.capacity, sub.q_m, ProbabilityVector(p), sub.iterations,
                          sub.gap, multiplier=math.inf, cost=cost)


def capacity_with_cost(w, cost: CostFunction, tol: float = DEFAULT_TOL,
                       max_iterations: int = MAX_ITERATIONS) -> CapacityReport:
    """C_{W,c,K} = max {I(P, W) : E_P c <= K}.

    Weak duality gives the upper bound max_x [D(W_x||Q) - lam c(x)] + lam K for
    every Q and lam >= 0. The lower bound is I at the mixture of the two
    bracketing Lagrangian solutions that meets the budget exactly.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    w = _matrix(w)
    if cost.costs.size != w.shape[0]:
        raise ValidationError(f"cost vector has {cost.costs.size} entries, channel has "
                              f"{w.shape[0]} inputs")
    c, budget = cost.costs, cost.cap
    if c.min() > budget:
        raise EmptyFeasibleSet(f"min cost {c.min()} exceeds cap {budget}")
    if c.max() <= budget:
        return _with_cost(capacity(w, tol, max_iterations), cost, 0.0)
    if c.min() >= budget:
        return _restricted_capacity(w, cost, tol, max_iterations)

    total_iters = 0

    def solve(lam, start):
        nonlocal total_iters
        it = _blahut_arimoto(w, lam, c, start, tol / 4, max_iterations)
        it = _polished(w, lam, c, it)
        total_iters += it.iterations
        return it

    p_start = np.full(w.shape[0], 1.0 / w.shape[0])
    free = solve(0.0, p_start)
    if np.dot(free.p, c) <= budget:
        return _with_cost(
            CapacityReport(0.5 * (free.upper + free.lower), ProbabilityVector(free.p @ w),
                           ProbabilityVector(free.p), total_iters, free.gap),
            cost, 0.0)

    best_upper = free.upper
    lo, lo_it = 0.0, free
    hi = 1.0
    hi_it = solve(hi, free.p)
    while np.dot(hi_it.p, c) > budget:
        lo, lo_it = hi, hi_it
        hi *= 2.0
        if hi > 1e12:
            raise NonConvergence("could not find a multiplier meeting the cost budget")
        hi_it = solve(hi, hi_it.p)
    best_upper = min(best_upper, lo_it.upper + lo * budget, hi_it.upper + hi * budget)

    for _ in range(200):
        cost_lo, cost_hi = float(np.dot(lo_it.p, c)), float(np.dot(hi_it.p, c))
        theta = (budget - cost_hi) / (cost_lo - cost_hi) if cost_lo > cost_hi else 0.0
        theta = min(max(theta, 0.0), 1.0)
        p_mix = theta * lo_it.p + (1.0 - theta) * hi_it.p
        lower = mutual_information(w, p_mix)
        if best_upper - lower <= tol:
            break
        if hi - lo <= 1e-15 * max(1.0, hi):
            raise NonConvergence(
                f"multiplier bracket collapsed with gap {best_upper - lower:.3e} > {tol:.1e}")
        mid = 0.5 * (lo + hi)
        mid_it = solve(mid, hi_it.p if np.dot(hi_it.p, c) <= budget else lo_it.p)
        best_upper = min(best_upper, mid_it.upper + mid * budget)
        if np.dot(mid_it.p, c) > budget:
            lo, lo_it = mid, mid_it
        else:
            hi, hi_it = mid, mid_it
    else:
        raise NonConvergence(f"cost bisection gap {best_upper - lower:.3e} > {tol:.1e}")

    p_mix /= p_mix.sum()
    return CapacityReport(
        capacity=0.5 * (best_upper + lower),
        q_m=ProbabilityVector(p_mix @ w),
        achiever=ProbabilityVector(p_mix),
        iterations=total_iters,
        gap=best_upper - lower,
        multiplier=_kkt_multiplier(w, p_mix, c, 0.5 * (lo + hi)),
        cost=cost,
    )


def _kkt_multiplier(w, p, costs, fallback: float) -> float:
    """Slope of D(W_x||W_P) against c(x) over the letters P actually uses.

    At the optimum these points lie on a line whose slope is the multiplier.
    The bisection midpoint is only good to the bisection width, which is far
    too coarse to decide which letters are tight.
    """
    used = p > 1e-9
    c_used = costs[used]
    if np.ptp(c_used) <= 1e-12:
        return fallback
    d_used = row_divergences(w, p @ w)[used]
    weights = p[used]
    c_bar = np.dot(weights, c_used) / weights.sum()
    d_bar = np.dot(weights, d_used) / weights.sum()
    slope = np.dot(weights, (c_used - c_bar) * (d_used - d_bar)) / \
        np.dot(weights, (c_used - c_bar) ** 2)
    return max(float(slope), 0.0)


def _with_cost(report: CapacityReport, cost: CostFunction, lam: float) -> CapacityReport:
    return CapacityReport(report.capacity, report.q_m, report.achiever, report.iterations,
                          report.gap, multiplier=lam, cost=cost)


# ---------------------------------------------------------------------------
# Capacity-achieving polytope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AchieverPolytope:
    """Inputs P with W_P = Q_M, supported on the tight letters (plus the cost row).

    ``a_eq``/``b_eq`` (and ``a_ub``/``b_ub`` for a slack cost constraint) are
    over the full input alphabet and, together with P >= 0, describe the set.
    ``vertices`` is filled when the support has at most 20 letters.
    """

    support_set: tuple
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ub: Optional[np.ndarray]
    b_ub: Optional[np.ndarray]
    q_m: ProbabilityVector
    capacity: float
    support_tol: float
    vertices: Optional[list] = field(default=None)

    def contains(self, p, tol: Optional[float] = None) -> bool:
        p = np.asarray(p, dtype=float)
        tol = 10 * self.support_tol if tol is None else tol
        if np.any(p < -tol):
            return False
        if np.max(np.abs(self.a_eq @ p - self.b_eq)) > tol:
            return False
        if self.a_ub is not None and np.any(self.a_ub @ p - self.b_ub > tol):
            return False
        return True

    def to_dict(self) -> dict:
        return {
            "support_set": list(self.support_set),
            "vertices": None if self.vertices is None
            else [v.probs.tolist() for v in self.vertices],
        }


def tight_scores(w, report: CapacityReport, cost: Optional[CostFunction] = None) -> np.ndarray:
    """Per-letter KKT score D(W_x||Q_M) - lam c(x); -inf for unusable letters."""
    w = _matrix(w)
    if cost is None:
        cost = report.cost
    scores = row_divergences(w, report.q_m.probs)
    lam = report.multiplier
    if cost is None or lam == 0.0:
        return scores
    if math.isinf(lam):
        return np.where(cost.costs <= cost.cap, scores, -np.inf)
    return scores - lam * cost.costs


def achiever_polytope(w, report: CapacityReport, cost: Optional[CostFunction] = None,
                      support_tol: float = DEFAULT_SUPPORT_TOL) -> AchieverPolytope:
    """Polytope of capacity-achieving inputs, from the KKT conditions at Q_M."""
    w = _matrix(w)
    if cost is None:
        cost = report.cost
    n_in, n_out = w.shape
    scores = tight_scores(w, report, cost)
    level = float(np.max(scores))
    ambiguous = (scores > level - 10 * support_tol) & (scores < level - support_tol)
    if np.any(ambiguous):
        x = int(np.flatnonzero(ambiguous)[0])
        raise SupportAmbiguity(
            f"letter {x} has KKT score {scores[x]!r} within 10*support_tol of the maximum "
            f"{level!r}; support_tol={support_tol} cannot separate it")
    support = tuple(int(x) for x in np.flatnonzero(scores >= level - support_tol))

    q = report.q_m.probs
    off = [x for x in range(n_in) if x not in support]
    rows = [w.T, np.ones((1, n_in))]
    rhs = [q, np.ones(1)]
    if off:
        rows.append(np.eye(n_in)[off])
        rhs.append(np.zeros(len(off)))
    a_ub = b_ub = None
    cost_mode = None
    lam = report.multiplier
    if cost is not None and not math.isinf(lam):
        if lam > 0:
            cost_mode = "eq"
            rows.append(cost.costs[None, :])
            rhs.append(np.array([cost.cap]))
        else:
            cost_mode = "slack"
            a_ub, b_ub = cost.costs[None, :].copy(), np.array([cost.cap])
    a_eq, b_eq = np.vstack(rows), np.concatenate(rhs)

    vertices = None
    if len(support) <= MAX_ENUMERATED_SUPPORT:
        vertices = _enumerate_vertices(w, q, support, cost, cost_mode, support_tol)
    return AchieverPolytope(support, a_eq, b_eq, a_ub, b_ub, report.q_m, report.capacity,
                            support_tol, vertices)


def _enumerate_vertices(w, q, support, cost, cost_mode, support_tol) -> list:
    """Basic feasible solutions of {z >= 0 : M z = b} by exhaustive basis search.

    Columns are the support letters, plus one slack column when the cost
    constraint is an inequality (``cost_mode == "slack"``).
    """
    n_in = w.shape[0]
    idx = list(support)
    mat = np.vstack([w[idx].T, np.ones((1, len(idx)))])
    rhs = np.append(q, 1.0)
    if cost_mode == "eq":
        mat = np.vstack([mat, cost.costs[idx][None, :]])
        rhs = np.append(rhs, cost.cap)
    elif cost_mode == "slack":
        mat = np.vstack([np.hstack([mat, np.zeros((mat.shape[0], 1))]),
                         np.append(cost.costs[idx], 1.0)])
        rhs = np.append(rhs, cost.cap)

    u, sv, _ = np.linalg.svd(mat, full_matrices=False)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    reduced, reduced_rhs = u[:, :rank].T @ mat, u[:, :rank].T @ rhs
    feas_tol = 10 * support_tol

    found: list = []
    for basis in itertools.combinations(range(mat.shape[1]), rank):
        sub = reduced[:, basis]
        if np.linalg.matrix_rank(sub, tol=1e-10) < rank:
            continue
        z_basis = np.linalg.solve(sub, reduced_rhs)
        if np.any(z_basis < -feas_tol):
            continue
        z = np.zeros(mat.shape[1])
        z[list(basis)] = np.maximum(z_basis, 0.0)
        if np.max(np.abs(mat @ z - rhs)) > feas_tol:
            continue
        p = np.zeros(n_in)
        p[list(support)] = z[:len(support)]
        p /= p.sum()
        if not any(np.max(np.abs(p - v)) <= feas_tol for v in found):
            found.append(p)
    return [ProbabilityVector(p) for p in found]
