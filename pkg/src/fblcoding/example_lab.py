"""A four-input channel whose capacity-achieving inputs form a segment with
different dispersions at its two ends.

Outputs are joint pairs (A, B) in {0,1}^2, flattened as 2A + B. Every row has
A uniform; rows 1 and 2 correlate A and B, rows 3, 4 and the reference row 5
make them independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .capacity import capacity
from .channel import DiscreteChannel, ProbabilityVector, binary_divergence, binary_entropy, kl_divergence
from .dispersion import analyze, conditional_dispersion
from .errors import ConditionViolation, DegenerateVertices, DomainError, RootBracketFailure, SupportLoss

LEVEL_TOL = 1e-12


def _independent(b0: float) -> np.ndarray:
    return 0.5 * np.array([b0, 1.0 - b0, b0, 1.0 - b0])


def equidistance_level(q1: float, q2: float) -> float:
    """h(q1) - (h(q2) + h(2 q1 - q2)) / 2."""
    r = min(max(2.0 * q1 - q2, 0.0), 1.0)
    return binary_entropy(q1) - 0.5 * (binary_entropy(q2) + binary_entropy(r))


def check_conditions(q1: float, q2: float) -> float:
    """Validate the parameter constraints and return the level."""
    if not (0.0 < q1 < 1.0 and 0.0 <= q2 <= 1.0):
        raise ConditionViolation(f"need 0 < q1 < 1 and 0 <= q2 <= 1, got q1={q1}, q2={q2}")
    if not -1e-15 <= 2.0 * q1 - q2 <= 1.0 + 1e-15:
        raise ConditionViolation(f"2 q1 - q2 = {2 * q1 - q2} lies outside [0, 1]")
    level = equidistance_level(q1, q2)
    bound = -math.log(max(q1, 1.0 - q1))
    if level > bound + LEVEL_TOL:
        raise ConditionViolation(f"level {level} exceeds -ln max(q1, 1-q1) = {bound}")
    return level


@dataclass(frozen=True)
class ExampleInstance:
    q1: float
    q2: float
    p1: float
    p2: float
    level: float
    channel: DiscreteChannel
    w5: ProbabilityVector

    def to_dict(self) -> dict:
        return {
            "q1": self.q1,
            "q2": self.q2,
            "p1": self.p1,
            "p2": self.p2,
            "level_nats": self.level,
            "channel": self.channel.matrix.tolist(),
            "w5": self.w5.probs.tolist(),
        }


def _branch_root(q1: float, level: float, lo: float, hi: float) -> float:
    def f(x):
        return binary_divergence(x, q1) - level

    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        raise RootBracketFailure(f"no sign change of d(x||q1) - level on [{lo}, {hi}]")
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def build_example(q1: float, q2: float) -> ExampleInstance:
    """Construct the channel and the two roots p1 < q1 < p2 of d(x||q1) = level."""
    q1, q2 = float(q1), float(q2)
    level = max(check_conditions(q1, q2), 0.0)
    if level <= LEVEL_TOL:
        p1 = p2 = q1
    else:
        # d(.||q1) decreases on [0, q1] and increases on [q1, 1].
        p1 = _branch_root(q1, level, 0.0, q1)
        p2 = _branch_root(q1, level, q1, 1.0)
    r = min(max(2.0 * q1 - q2, 0.0), 1.0)
    w1 = 0.5 * np.array([q2, 1.0 - q2, r, 1.0 - r])
    w2 = 0.5 * np.array([r, 1.0 - r, q2, 1.0 - q2])
    rows = np.vstack([w1, w2, _independent(p1), _independent(p2)])
    return ExampleInstance(q1, q2, p1, p2, level, DiscreteChannel(rows),
                           ProbabilityVector(_independent(q1)))


def verify_equidistance(inst: ExampleInstance) -> np.ndarray:
    """D(W_i || W_5) for the four rows; each should equal ``inst.level``."""
    w5 = inst.w5.probs
    return np.array([kl_divergence(row, w5) for row in inst.channel.matrix])


def vertex_inputs(inst: ExampleInstance) -> tuple:
    """The two ends of the achiever segment: (1/2, 1/2, 0, 0) and the B-balanced mix of rows 3, 4."""
    if abs(inst.p1 - inst.p2) <= LEVEL_TOL:
        raise DegenerateVertices("p1 = p2: the second vertex is undefined")
    a = (inst.q1 - inst.p2) / (inst.p1 - inst.p2)
    return (ProbabilityVector([0.5, 0.5, 0.0, 0.0]),
            ProbabilityVector([0.0, 0.0, a, 1.0 - a]))


def example_v_endpoints(inst: ExampleInstance) -> tuple:
    """(V at P, V at P'); both zero when every row equals W_5."""
    if inst.level <= LEVEL_TOL and np.allclose(inst.channel.matrix, inst.w5.probs, atol=1e-15):
        return 0.0, 0.0
    p, p_prime = vertex_inputs(inst)
    w = inst.channel.matrix
    return conditional_dispersion(w, p), conditional_dispersion(w, p_prime)


def sweep(q1_values=None, ratio: float = 0.5, steps: int = 41) -> list:
    """Rows (q1, q2, v_p, v_pprime, capacity) with q2 = ratio * q1."""
    if q1_values is None:
        q1_values = np.linspace(0.05, 0.45, steps)
    rows = []
    for q1 in q1_values:
        inst = build_example(float(q1), ratio * float(q1))
        v_p, v_pp = example_v_endpoints(inst)
        rows.append((inst.q1, inst.q2, v_p, v_pp, capacity(inst.channel.matrix).capacity))
    return rows


def lp_endpoints(inst: ExampleInstance, method: str = "auto"):
    """V+ / V- of the built channel from the generic polytope machinery."""
    _, polytope, disp = analyze(inst.channel.matrix, method=method)
    return polytope, disp


# ---------------------------------------------------------------------------
# Alternating projections onto the A- and B-marginal constraints
# ---------------------------------------------------------------------------


def _as_grid(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(2, 2)
    if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
        raise DomainError("joint distribution must be non-negative and sum to 1")
    return q / q.sum()


def project_a(q, pa) -> np.ndarray:
    """(E_A Q)(a, b) = P^A(a) Q(b | a)."""
    q = _as_grid(q)
    rows = q.sum(axis=1)
    if np.any(rows <= 0):
        raise SupportLoss("an A-marginal entry vanished; Q(b|a) is undefined")
    return (np.asarray(pa)[:, None] * q / rows[:, None]).ravel()


def project_b(q, pb) -> np.ndarray:
    """(E_B Q)(a, b) = P^B(b) Q(a | b)."""
    q = _as_grid(q)
    cols = q.sum(axis=0)
    if np.any(cols <= 0):
        raise SupportLoss("a B-marginal entry vanished; Q(a|b) is undefined")
    return (q * np.asarray(pb)[None, :] / cols[None, :]).ravel()


@dataclass(frozen=True)
class ProjectionTrace:
    steps: np.ndarray  # D(Q_k || Q_{k-1}) for k = 1, 2, ...
    limit: np.ndarray
    pythagoras_error: float


def alternating_projection_check(inst: ExampleInstance, q0, iters: int = 200,
                                 tol: float = 1e-14) -> ProjectionTrace:
    """Apply E_A, E_B, E_A, ... to q0 and record D(Q_k || Q_{k-1}).

    At every step the identity D(Q'||Q) = D(Q'||E Q) + D(E Q||Q) is evaluated
    with Q' = W_5, which has both target marginals; the largest violation is
    reported. Stops early once a step divergence falls below ``tol``.
    """
    q = np.asarray(q0, dtype=float).ravel()
    if q.size != 4 or np.any(q <= 0):
        raise SupportLoss("the starting distribution needs full support on the 4 joint outcomes")
    q = _as_grid(q).ravel()
    pa = np.array([0.5, 0.5])
    pb = np.array([inst.q1, 1.0 - inst.q1])
    target = inst.w5.probs
    steps, worst = [], 0.0
    for k in range(iters):
        nxt = project_a(q, pa) if k % 2 == 0 else project_b(q, pb)
        lhs = kl_divergence(target, q)
        rhs = kl_divergence(target, nxt) + kl_divergence(nxt, q)
        worst = max(worst, abs(lhs - rhs))
        steps.append(kl_divergence(nxt, q))
        q = nxt
        if steps[-1] < tol and k > 0:
            break
    return ProjectionTrace(np.array(steps), q, worst)


def independence_gap(p2, q) -> tuple:
    """(D(P2||Q), D(P2||P2^A x P2^B)) for a joint P2 and a Q with uniform A-marginal.

    The first never falls below the second.
    """
    p2, qg = _as_grid(p2), _as_grid(q)
    if np.max(np.abs(qg.sum(axis=1) - 0.5)) > 1e-12:
        raise DomainError("Q must have a uniform A-marginal")
    product = np.outer(p2.sum(axis=1), p2.sum(axis=0))
    return kl_divergence(p2.ravel(), qg.ravel()), kl_divergence(p2.ravel(), product.ravel())
