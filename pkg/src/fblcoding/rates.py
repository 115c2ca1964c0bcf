"""Second-order coding rate and its inverse, the asymptotic error at a fixed
second-order rate, with the V+/V- case split."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .capacity import DEFAULT_SUPPORT_TOL, DEFAULT_TOL
from .channel import CostFunction, DiscreteChannel
from .dispersion import analyze
from .errors import DomainError
from .gaussian import GaussianParams, gaussian_capacity, gaussian_dispersion
from .normal import normal_cdf, normal_quantile


@dataclass(frozen=True)
class SecondOrderReport:
    capacity: float
    v_plus: float
    v_minus: float
    branch: str  # "plus" or "minus": which dispersion the case split picked
    eps: Optional[float] = None
    rate: Optional[float] = None  # sqrt(V) G^{-1}(eps), nats per sqrt(letter)
    a: Optional[float] = None
    error: Optional[float] = None  # G(a / sqrt(V))

    @property
    def dispersion(self) -> float:
        return self.v_plus if self.branch == "plus" else self.v_minus

    def to_dict(self) -> dict:
        out = {
            "capacity_nats": self.capacity,
            "v_plus": self.v_plus,
            "v_minus": self.v_minus,
            "branch": self.branch,
        }
        if self.eps is not None:
            out.update(eps=self.eps, second_order_rate=self.rate)
        else:
            out.update(a=self.a, error=self.error)
        return out


def rate_from_dispersion(v: float, eps: float) -> float:
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if eps == 0.5:
        return 0.0
    return math.sqrt(max(v, 0.0)) * normal_quantile(eps)


def error_from_dispersion(v: float, a: float) -> float:
    if not math.isfinite(a):
        raise DomainError("a must be finite")
    if v <= 0.0:
        return 0.5 if a == 0 else float(a > 0)
    return normal_cdf(a / math.sqrt(v))


def second_order(channel: Union[DiscreteChannel, GaussianParams],
                 eps: Optional[float] = None, a: Optional[float] = None,
                 cost: Optional[CostFunction] = None, tol: float = DEFAULT_TOL,
                 support_tol: float = DEFAULT_SUPPORT_TOL,
                 method: str = "auto") -> SecondOrderReport:
    """Rate side sqrt(V) G^{-1}(eps) or error side G(a/sqrt(V)).

    V+ is used when eps >= 1/2 (rate side) or a >= 0 (error side), V-
    otherwise. A Gaussian channel has a single dispersion, so V+ = V-.
    """
    if (eps is None) == (a is None):
        raise DomainError("give exactly one of eps and a")
    if isinstance(channel, GaussianParams):
        if cost is not None:
            raise DomainError("the Gaussian channel carries its power constraint in its parameters")
        cap = gaussian_capacity(channel)
        v_plus = v_minus = gaussian_dispersion(channel)
    else:
        report, _, disp = analyze(channel, cost, tol, support_tol, method)
        cap, v_plus, v_minus = report.capacity, disp.v_plus, disp.v_minus
    if eps is not None:
        branch = "plus" if eps >= 0.5 else "minus"
        v = v_plus if branch == "plus" else v_minus
        return SecondOrderReport(cap, v_plus, v_minus, branch, eps=float(eps),
                                 rate=rate_from_dispersion(v, eps))
    branch = "plus" if a >= 0 else "minus"
    v = v_plus if branch == "plus" else v_minus
    return SecondOrderReport(cap, v_plus, v_minus, branch, a=float(a),
                             error=error_from_dispersion(v, a))
