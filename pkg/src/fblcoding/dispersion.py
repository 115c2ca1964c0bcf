"""Channel dispersion: V_{P,W} in its three forms and its extremes V+ / V- over
the capacity-achieving polytope.

Reduction used for the extremes: every P in the polytope has W_P = Q_M, so

    V_{P,W} = sum_x P(x) Var_{W_x}[ln W_x / Q_M] = sum_x P(x) v(x)

with v independent of P. Maximising and minimising V over the polytope is
therefore a linear program, and its optimum sits at a vertex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .capacity import (
    DEFAULT_SUPPORT_TOL,
    DEFAULT_TOL,
    AchieverPolytope,
    CapacityReport,
    achiever_polytope,
    capacity,
    capacity_with_cost,
)
from .channel import (
    AbsoluteContinuityViolation,
    CostFunction,
    DimensionMismatch,
    ProbabilityVector,
    _matrix,
    _probs,
    log_ratio,
    mutual_information,
    output_distribution,
)
from .errors import EmptyPolytope, LPUnbounded


@dataclass(frozen=True)
class DispersionReport:
    v_plus: float
    v_minus: float
    p_plus: ProbabilityVector
    p_minus: ProbabilityVector

    def to_dict(self) -> dict:
        return {
            "v_plus": self.v_plus,
            "v_minus": self.v_minus,
            "p_plus": self.p_plus.probs.tolist(),
            "p_minus": self.p_minus.probs.tolist(),
        }


def letter_variances(w, q) -> np.ndarray:
    """v(x) = Var_{W_x}[ln W_x(y)/q(y)]; +inf for rows escaping support(q)."""
    w = _matrix(w)
    q = np.asarray(q, dtype=float)
    if q.size != w.shape[1]:
        raise DimensionMismatch(f"channel has {w.shape[1]} outputs, q has {q.size}")
    escaped = np.any((w > 0) & (q[None, :] == 0), axis=1)
    # Escaped rows get a finite placeholder ratio and are overwritten below.
    ratio = log_ratio(w, np.where(q > 0, q, 1.0)[None, :])
    mean = np.sum(w * ratio, axis=1)
    var = np.sum(w * (ratio - mean[:, None]) ** 2, axis=1)
    var[escaped] = np.inf
    return np.maximum(var, 0.0)


def conditional_dispersion(w, p) -> float:
    """V_{P,W} = sum_x P(x) Var_{W_x}[ln W_x/W_P], each row centred on its own mean."""
    w, p = _matrix(w), _probs(p)
    q = output_distribution(w, p).probs
    mask = p > 0
    return float(np.dot(p[mask], letter_variances(w[mask], q)))


def unconditional_dispersion(w, p) -> float:
    """Variance of ln W_x(y)/W_P(y) under P x W, centred on I(P, W)."""
    w, p = _matrix(w), _probs(p)
    q = output_distribution(w, p).probs
    info = mutual_information(w, p)
    mask = p > 0
    ratio = log_ratio(w[mask], q[None, :])
    second = np.sum(w[mask] * (ratio - info) ** 2, axis=1)
    return max(float(np.dot(p[mask], second)), 0.0)


def reference_dispersion(w, p, q) -> float:
    """sum_x P(x) Var_{W_x}[ln W_x/Q] for an arbitrary reference output Q."""
    w, p, q = _matrix(w), _probs(p), _probs(q)
    mask = p > 0
    v = letter_variances(w[mask], q)
    if np.any(np.isinf(v)):
        raise AbsoluteContinuityViolation("some used row W_x puts mass outside support(Q)")
    return float(np.dot(p[mask], v))


def dispersion_extremes(w, polytope: AchieverPolytope, method: str = "auto") -> DispersionReport:
    """V+ and V- with their witnesses, by LP over the achiever polytope.

    ``method`` is "vertices" (scan the enumerated vertices), "lp" (HiGHS on
    the constraint form) or "auto" (vertices when available).
    """
    w = _matrix(w)
    v = letter_variances(w, polytope.q_m.probs)
    off = np.setdiff1d(np.arange(w.shape[0]), polytope.support_set)
    # Letters outside the support carry zero mass; keep their objective finite.
    v[off] = 0.0

    if method == "auto":
        method = "vertices" if polytope.vertices is not None else "lp"
    if method == "vertices":
        if not polytope.vertices:
            raise EmptyPolytope("the achiever polytope has no vertices")
        values = [float(np.dot(p.probs, v)) for p in polytope.vertices]
        i_max, i_min = int(np.argmax(values)), int(np.argmin(values))
        return DispersionReport(max(values[i_max], 0.0), max(values[i_min], 0.0),
                                polytope.vertices[i_max], polytope.vertices[i_min])
    if method != "lp":
        raise ValueError(f"unknown method {method!r}")

    p_plus, v_plus = _solve_lp(-v, polytope)
    p_minus, v_minus = _solve_lp(v, polytope)
    return DispersionReport(max(-v_plus, 0.0), max(v_minus, 0.0), p_plus, p_minus)


def _solve_lp(objective, polytope: AchieverPolytope):
    res = linprog(objective, A_ub=polytope.a_ub, b_ub=polytope.b_ub,
                  A_eq=polytope.a_eq, b_eq=polytope.b_eq,
                  bounds=[(0, None)] * objective.size, method="highs")
    if res.status == 3:
        raise LPUnbounded("dispersion LP is unbounded; the polytope constraints are wrong")
    if res.status != 0:
        raise EmptyPolytope(f"dispersion LP failed: {res.message}")
    p = np.maximum(res.x, 0.0)
    return ProbabilityVector(p / p.sum()), float(res.fun)


def analyze(w, cost: Optional[CostFunction] = None, tol: float = DEFAULT_TOL,
            support_tol: float = DEFAULT_SUPPORT_TOL, method: str = "auto"):
    """Capacity, achiever polytope and V+/V- for one channel (optionally cost-constrained)."""
    w = _matrix(w)
    report: CapacityReport = capacity(w, tol) if cost is None else capacity_with_cost(w, cost, tol)
    polytope = achiever_polytope(w, report, cost, support_tol)
    return report, polytope, dispersion_extremes(w, polytope, method)
