import math

import numpy as np
import pytest
from scipy import integrate

from fblcoding.errors import DomainError, ValidationError
from fblcoding.gaussian import (
    GaussianParams,
    gaussian_capacity,
    gaussian_conditional_variance,
    gaussian_dispersion,
    gaussian_divergence_profile,
    gaussian_error,
    gaussian_second_order,
    sample_gaussian_information_density,
)
from fblcoding.normal import normal_cdf
from fblcoding.spectrum import ks_distance


def test_params_validation():
    with pytest.raises(ValidationError):
        GaussianParams(0.0, 1.0)
    with pytest.raises(ValidationError):
        GaussianParams(1.0, math.inf)


@pytest.mark.parametrize("snr", [0.01, 0.5, 1.0, 3.0, 100.0])
def test_closed_forms(snr):
    g = GaussianParams(2.0, 2.0 * snr)
    assert gaussian_capacity(g) == pytest.approx(0.5 * math.log(1 + snr), abs=1e-12)
    v = (snr ** 2 + 2 * snr) / (2 * (1 + snr) ** 2)
    assert gaussian_dispersion(g) == pytest.approx(v, abs=1e-12)
    assert 0 < gaussian_dispersion(g) < 0.5


def test_named_values():
    assert gaussian_dispersion(GaussianParams(1.0, 1.0)) == pytest.approx(0.375, abs=1e-15)
    assert gaussian_capacity(GaussianParams(1.0, 3.0)) == pytest.approx(math.log(2), abs=1e-15)
    assert gaussian_dispersion(GaussianParams(1.0, 1e8)) == pytest.approx(0.5, abs=1e-7)


def test_divergence_profile():
    g = GaussianParams(1.5, 2.5)
    c = gaussian_capacity(g)
    assert gaussian_divergence_profile(g, math.sqrt(g.signal_power)) == pytest.approx(c, abs=1e-15)
    assert gaussian_divergence_profile(g, 0.0) == pytest.approx(c - g.snr / (2 * (1 + g.snr)))
    avg, _ = integrate.quad(
        lambda x: gaussian_divergence_profile(g, x)
        * math.exp(-x * x / (2 * g.signal_power)) / math.sqrt(2 * math.pi * g.signal_power),
        -np.inf, np.inf, epsabs=1e-13)
    assert avg == pytest.approx(c, abs=1e-12)


def test_divergence_profile_against_quadrature():
    # D(N(x, N) || N(0, N + S)) evaluated from its integral definition.
    g = GaussianParams(1.0, 2.0)
    x = 0.7
    n, s = g.noise_power, g.signal_power

    def integrand(y):
        log_w = -(y - x) ** 2 / (2 * n) - 0.5 * math.log(2 * math.pi * n)
        log_q = -y * y / (2 * (n + s)) - 0.5 * math.log(2 * math.pi * (n + s))
        return math.exp(log_w) * (log_w - log_q)

    d, _ = integrate.quad(integrand, x - 20, x + 20, epsabs=1e-13)
    assert gaussian_divergence_profile(g, x) == pytest.approx(d, abs=1e-10)
    assert gaussian_conditional_variance(g, math.sqrt(s)) == pytest.approx(gaussian_dispersion(g))


def test_second_order_and_error():
    g = GaussianParams(1.0, 1.0)
    assert gaussian_second_order(g, 0.5) == 0.0
    assert gaussian_error(g, 0.0) == 0.5
    assert gaussian_second_order(g, 0.05) == pytest.approx(-1.6448536269514729 * math.sqrt(0.375),
                                                           abs=1e-12)
    for eps in np.linspace(0.01, 0.99, 99):
        assert gaussian_error(g, gaussian_second_order(g, eps)) == pytest.approx(eps, abs=1e-12)
    with pytest.raises(DomainError):
        gaussian_second_order(g, 0.0)


def test_shell_sampler_matches_clt():
    g = GaussianParams(1.0, 1.0)
    v = gaussian_dispersion(g)
    values = sample_gaussian_information_density(g, 10_000, 10_000, seed=11)
    assert ks_distance(values, lambda x: normal_cdf(x / math.sqrt(v))) <= 0.02


def test_iid_sampler_has_larger_spread():
    g = GaussianParams(1.0, 1.0)
    shell = sample_gaussian_information_density(g, 500, 2000, seed=1)
    iid = sample_gaussian_information_density(g, 500, 2000, seed=1, input_law="iid")
    # Var_x D(W_x||W_PM) = 2 S^2 / (4 N^2 (1 + S/N)^2) = 0.125 at S = N.
    assert np.var(iid) == pytest.approx(0.375 + 0.125, rel=0.1)
    assert np.var(shell) == pytest.approx(0.375, rel=0.1)
