"""Standard normal distribution function G and its inverse."""

import math

import numpy as np

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam's rational approximation, used only as the starting point for Newton.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425

_erfc = np.frompyfunc(math.erfc, 1, 1)


def normal_cdf(x):
    """G(x) for a scalar or array, computed from erfc so both tails keep full precision."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / _SQRT2)
    arr = np.asarray(x, dtype=float)
    return 0.5 * _erfc(-arr / _SQRT2).astype(float)


def normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT2PI


def _initial_quantile(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-p))
        return -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def normal_quantile(p: float) -> float:
    """G^{-1}(p) for p in (0, 1).

    The rational estimate is polished by Newton steps on G(x) - p; two or
    three steps reach the limit of double precision.
    """
    p = float(p)
    if not 0.0 < p < 1.0 or math.isnan(p):
        raise DomainError(f"quantile argument must lie in (0, 1), got {p!r}")
    if p == 0.5:
        return 0.0
    x = _initial_quantile(p)
    for _ in range(4):
        # Work in the smaller tail so the residual is not swamped by cancellation.
        if x < 0:
            resid = normal_cdf(x) - p
        else:
            resid = (1.0 - p) - normal_cdf(-x)
        density = normal_pdf(x)
        if density == 0.0:
            break
        step = resid / density
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x
