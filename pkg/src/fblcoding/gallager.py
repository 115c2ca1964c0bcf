"""Gallager random-coding bound in the second-order regime."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import _matrix, _probs, mutual_information
from .errors import DomainError, NonConvergence
from .normal import normal_cdf

FD_STEP = 1e-4
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _powered_mixture(w: np.ndarray, p: np.ndarray, s: float):
    """g_y(s) = sum_x P(x) W_x(y)^{1/(1+s)} together with the powered matrix."""
    alpha = 1.0 / (1.0 + s)
    powered = np.zeros_like(w)
    mask = w > 0
    powered[mask] = w[mask] ** alpha
    return p @ powered, powered


def psi(w, p, s: float) -> float:
    """psi_P(s) = ln sum_y (sum_x P(x) W_x(y)^{1/(1+s)})^{1+s}."""
    if not -1.0 < s <= 1.0:
        raise DomainError(f"s must lie in (-1, 1], got {s}")
    if s == 0.0:
        return 0.0
    w, p = _matrix(w), _probs(p)
    g, _ = _powered_mixture(w, p, s)
    used = g > 0
    return float(np.logaddexp.reduce((1.0 + s) * np.log(g[used])))


def psi_prime(w, p, s: float) -> float:
    """Analytic d psi_P / ds."""
    w, p = _matrix(w), _probs(p)
    g, powered = _powered_mixture(w, p, s)
    used = g > 0
    g = g[used]
    logw = np.zeros_like(w)
    logw[w > 0] = np.log(w[w > 0])
    # d/ds g_y = -(1+s)^{-2} sum_x P(x) W^{alpha} ln W
    dg = -(p @ (powered * logw))[used] / (1.0 + s) ** 2
    log_terms = (1.0 + s) * np.log(g)
    weights = np.exp(log_terms - np.logaddexp.reduce(log_terms))
    return float(np.dot(weights, np.log(g) + (1.0 + s) * dg / g))


def psi_derivatives(w, p, step: float = FD_STEP) -> tuple:
    """Central finite differences of psi_P at 0: (psi'(0), psi''(0)).

    psi_P extends smoothly to s in (-1, 0), so the central stencil is used.
    """
    w, p = _matrix(w), _probs(p)
    plus, minus = psi(w, p, step), psi(w, p, -step)
    first = (plus - minus) / (2.0 * step)
    second = (plus - 2.0 * psi(w, p, 0.0) + minus) / (step * step)
    return first, second


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float,
                   max_iter: int = 500) -> tuple:
    """Minimise a convex f on [lo, hi]; endpoints are checked explicitly so a
    boundary minimiser is returned exactly."""
    if tol < 1e-14:
        raise NonConvergence(f"golden-section tolerance {tol} is below 1e-14")
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    else:
        raise NonConvergence("golden-section search did not reach tolerance")
    best = min(((fc, c), (fd, d), (f(lo), lo), (f(hi), hi)))
    return best[1], best[0]


def gallager_minimize(w, p, rate: float, tol: float = 1e-12) -> tuple:
    """(s*, min_{0<=s<=1} R s + psi_P(s)): the per-letter Gallager exponent."""
    if rate <= 0:
        raise DomainError("rate must be positive")
    w, p = _matrix(w), _probs(p)
    # f'(0) = R - I(P, W) >= 0 makes s = 0 optimal by convexity.
    if rate >= mutual_information(w, p):
        return 0.0, 0.0
    return golden_section(lambda s: rate * s + psi(w, p, s), 0.0, 1.0, tol)


@dataclass(frozen=True)
class LimitRow:
    n: int
    scaled_min: float
    s_n: float
    sqrt_n_s_n: float


def stationary_point(w, p, target: float, tol: float = 1e-15) -> float:
    """s in [0, 1] with -psi_P'(s) = target, by bisection (psi_P' is increasing)."""
    w, p = _matrix(w), _probs(p)
    lo, hi = 0.0, 1.0
    if -psi_prime(w, p, lo) <= target:
        return 0.0
    if -psi_prime(w, p, hi) >= target:
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if -psi_prime(w, p, mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def second_order_gallager_limit(w, p, r2: float, n_grid: Sequence[int],
                                tol: float = 1e-14) -> list:
    """n min_s (C s + r2/sqrt(n) s + psi_P(s)) for each n, with C = I(P, W).

    Also reports the stationary point s_n solving C + r2/sqrt(n) = -psi'(s_n);
    sqrt(n) s_n tends to -r2 / V.
    """
    if r2 >= 0:
        raise DomainError("the second-order Gallager limit needs r2 < 0")
    w, p = _matrix(w), _probs(p)
    cap = mutual_information(w, p)
    rows = []
    for n in n_grid:
        slope = cap + r2 / math.sqrt(n)
        _, value = golden_section(lambda s: slope * s + psi(w, p, s), 0.0, 1.0, tol)
        s_n = stationary_point(w, p, slope)
        rows.append(LimitRow(int(n), n * value, s_n, math.sqrt(n) * s_n))
    return rows


def gallager_limit_value(r2: float, v: float) -> float:
    return -r2 * r2 / (2.0 * v)


@dataclass(frozen=True)
class GallagerCurve:
    r2_grid: np.ndarray
    gallager_bound: np.ndarray
    gaussian_value: np.ndarray
    v: float


def comparison_curve(v: float, r2_min: float, r2_max: float, steps: int) -> GallagerCurve:
    """G(R2/sqrt(v)) against min(1, exp(-R2^2/(2v))) on a uniform grid.

    The Gallager bound is trivial (= 1) for R2 > 0.
    """
    if v <= 0:
        raise DomainError("v must be positive")
    if not r2_min < r2_max:
        raise DomainError("need r2_min < r2_max")
    grid = np.linspace(r2_min, r2_max, steps)
    gaussian = normal_cdf(grid / math.sqrt(v))
    bound = np.where(grid > 0, 1.0, np.exp(-grid * grid / (2.0 * v)))
    return GallagerCurve(grid, np.minimum(bound, 1.0), gaussian, v)
