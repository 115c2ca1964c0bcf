import itertools
import math

import numpy as np
import pytest
from scipy import stats

from fblcoding.channel import DiscreteChannel
from fblcoding.errors import (
    AbsoluteContinuityViolation,
    EnumerationTooLarge,
    TypeEnumerationTooLarge,
)
from fblcoding.normal import normal_cdf
from fblcoding.spectrum import (
    MixtureReference,
    converse_bound_check,
    density_tail,
    direct_bound,
    empirical_ip,
    exact_random_code,
    ks_distance,
    max_discrimination,
    sample_information_density,
    threshold_decoder_error,
)

BSC = DiscreteChannel.bsc(0.11).matrix
U = np.array([0.5, 0.5])


def test_identity_channel_is_degenerate():
    s = sample_information_density(np.eye(3), np.full(3, 1 / 3), None, 200, 20, seed=0)
    assert np.all(np.abs(s.values) < 1e-12)


def test_half_bsc_is_degenerate():
    s = sample_information_density(DiscreteChannel.bsc(0.5).matrix, U, None, 100, 20, seed=0)
    assert np.all(s.values == 0.0)


def test_seed_reproducibility_and_worker_independence():
    a = sample_information_density(BSC, U, None, 300, 64, seed=9)
    b = sample_information_density(BSC, U, None, 300, 64, seed=9)
    c = sample_information_density(BSC, U, None, 300, 64, seed=9, workers=3)
    assert a.values.tobytes() == b.values.tobytes() == c.values.tobytes()
    d = sample_information_density(BSC, U, None, 300, 64, seed=10)
    assert not np.array_equal(a.values, d.values)


def test_reference_must_dominate():
    with pytest.raises(AbsoluteContinuityViolation):
        sample_information_density(BSC, U, [1.0, 0.0], 10, 5, seed=0)


def test_sample_moments_match_dispersion():
    s = sample_information_density(BSC, U, None, 2000, 4000, seed=3)
    v = 0.11 * 0.89 * math.log(0.89 / 0.11) ** 2
    assert abs(s.values.mean()) < 4 * math.sqrt(v / 4000)
    assert np.var(s.values) == pytest.approx(v, rel=0.08)


def test_empirical_ip_edges():
    s = sample_information_density(BSC, U, None, 100, 101, seed=2)
    assert empirical_ip(s, s.values.min()) == 0.0
    assert empirical_ip(s, s.values.max() + 1) == 1.0
    assert abs(empirical_ip(s, float(np.median(s.values))) - 0.5) <= 1 / 101 + 0.05


def test_ks_distance_matches_scipy():
    rng = np.random.default_rng(0)
    x = rng.normal(size=500)
    ours = ks_distance(x, normal_cdf)
    assert ours == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-14)


def _enumerated_tail(w, p, n, rate):
    q = p @ w
    total = 0.0
    for xs in itertools.product(range(w.shape[0]), repeat=n):
        for ys in itertools.product(range(w.shape[1]), repeat=n):
            prob, dens = 1.0, 0.0
            for x, y in zip(xs, ys):
                prob *= p[x] * w[x, y]
                dens += math.log(w[x, y] / q[y]) if w[x, y] > 0 else 0.0
            if prob > 0 and dens <= n * rate + 1e-9:
                total += prob
    return total


def test_density_tail_against_brute_force():
    w = np.array([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]])
    p = np.array([0.4, 0.6])
    for rate in (-0.1, 0.05, 0.2):
        assert density_tail(w, p, 4, rate) == pytest.approx(_enumerated_tail(w, p, 4, rate),
                                                            abs=1e-13)


def test_single_codeword_error_is_the_tail():
    trial = exact_random_code(BSC, U, 10, 1, 0.2, seed=4)
    word = trial.codebook[0]
    # W_x^n{density <= nR}: count flips k, density = k ln(2p) + (n-k) ln(2(1-p)).
    tail = sum(math.comb(10, k) * 0.11 ** k * 0.89 ** (10 - k) for k in range(11)
               if k * math.log(0.22) + (10 - k) * math.log(1.78) <= 2.0)
    assert trial.exact_error == pytest.approx(tail, abs=1e-13)
    assert len(word) == 10


def test_identity_channel_collisions():
    w = np.eye(2)
    for seed in range(20):
        trial = exact_random_code(w, U, 3, 5, 0.3, seed=seed)
        distinct = len({tuple(c) for c in trial.codebook})
        # Only the first copy of a repeated codeword decodes.
        assert trial.exact_error == pytest.approx(1 - distinct / 5, abs=1e-14)


def test_enumeration_guard():
    with pytest.raises(EnumerationTooLarge):
        exact_random_code(BSC, U, 30, 2, 0.1, seed=0)
    with pytest.raises(EnumerationTooLarge):
        threshold_decoder_error(BSC, U, np.zeros((1, 15), dtype=int), 0.1)


def test_direct_bound_holds_on_average():
    errors = np.array([exact_random_code(BSC, U, 10, 4, 0.2, seed=s).exact_error
                       for s in range(200)])
    se = errors.std(ddof=1) / math.sqrt(errors.size)
    assert errors.mean() <= direct_bound(BSC, U, 10, 4, 0.2) + 3 * se


def test_converse_trivial_cases():
    trial = exact_random_code(BSC, U, 6, 4, math.log(4) / 6, seed=1)
    lhs, rhs = converse_bound_check(BSC, trial, U, gamma=50.0)
    assert rhs <= 0 <= lhs
    one = exact_random_code(BSC, U, 6, 1, 0.0, seed=1)
    lhs, rhs = converse_bound_check(BSC, one, U, gamma=0.1)
    assert lhs > rhs


def test_converse_holds_on_random_codebooks():
    mix = MixtureReference(BSC, 8)
    for seed in range(30):
        trial = exact_random_code(BSC, U, 8, 8, math.log(8) / 8, seed=seed)
        for qref in (U, mix):
            lhs, rhs = converse_bound_check(BSC, trial, qref, 0.1)
            assert lhs >= rhs


def test_mixture_reference_structure():
    mix1 = MixtureReference(BSC, 1)
    assert mix1.component_count == 3  # two types plus Q_M
    y = np.array([[0], [1]])
    dens = np.exp(mix1.log_density(y))
    comps = np.exp(mix1.component_log_densities(y))
    assert np.all(dens[:, None] >= comps / mix1.component_count - 1e-15)
    mix = MixtureReference(BSC, 10)
    assert mix.component_count == 12
    assert mix.component_count - 1 <= 11 ** 2
    assert np.exp(mix.log_density_all()).sum() == pytest.approx(1.0, abs=1e-12)


def test_mixture_guard():
    with pytest.raises(TypeEnumerationTooLarge):
        MixtureReference(np.full((6, 2), 0.5), 60)


def test_mixture_spectrum_shift():
    # Q_U^n >= W_P^n / (|T_n|+1) pointwise, so the density against Q_U^n exceeds
    # the density against W_P^n by at most ln(|T_n|+1).
    n = 10
    mix = MixtureReference(BSC, n)
    rng = np.random.default_rng(8)
    x = rng.integers(0, 2, size=(500, n))
    flips = rng.random((500, n)) < 0.11
    y = x ^ flips
    log_w = np.where(flips, math.log(0.11), math.log(0.89)).sum(axis=1)
    d_prod = (log_w - n * math.log(0.5)) / math.sqrt(n)
    d_mix = (log_w - mix.log_density(y)) / math.sqrt(n)
    shift = math.log(mix.component_count) / math.sqrt(n)
    assert np.all(d_mix <= d_prod + shift + 1e-12)
    for r2 in (-0.5, 0.0, 0.5):
        assert np.mean(d_mix < r2) >= np.mean(d_prod < r2 - shift)


def test_max_discrimination_identity():
    rng = np.random.default_rng(4)
    for _ in range(25):
        p, q = rng.dirichlet(np.ones(12)), rng.dirichlet(np.ones(12))
        a = rng.uniform(0.1, 3.0)
        brute, formula = max_discrimination(p, q, a)
        assert brute == pytest.approx(formula, abs=1e-14)
