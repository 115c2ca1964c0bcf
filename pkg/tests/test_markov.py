import itertools
import json
import math

import numpy as np
import pytest

from fblcoding.channel import entropy
from fblcoding.errors import DomainError, ValidationError
from fblcoding.gallager import psi
from fblcoding.markov import (
    MarkovNoise,
    entropy_rate,
    exact_block_variance,
    log_powered_sum,
    markov_capacity,
    markov_error,
    markov_gallager_psi,
    markov_scaled_gallager_min,
    markov_second_order,
    markov_variance,
    monte_carlo_variance,
)

FLIP = MarkovNoise([[0.9, 0.1], [0.2, 0.8]])


def h(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def test_validation():
    with pytest.raises(ValidationError):
        MarkovNoise([[1.0, 0.0], [0.0, 1.0]])  # reducible
    with pytest.raises(ValidationError):
        MarkovNoise([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(ValidationError):
        MarkovNoise.from_dict({"d": 3, "transition": [[0.5, 0.5], [0.5, 0.5]]})


def test_json_round_trip():
    back = MarkovNoise.from_json(json.dumps(FLIP.to_dict()))
    assert np.array_equal(back.transition, FLIP.transition)


def test_stationary_and_entropy_rate():
    assert np.allclose(FLIP.stationary.probs, [2 / 3, 1 / 3], atol=1e-14)
    assert entropy_rate(FLIP) == pytest.approx(2 / 3 * h(0.1) + 1 / 3 * h(0.2), abs=1e-14)
    assert markov_capacity(FLIP) == pytest.approx(math.log(2) - entropy_rate(FLIP), abs=1e-15)


def test_trivial_chains():
    uniform = MarkovNoise(np.full((3, 3), 1 / 3))
    assert entropy_rate(uniform) == pytest.approx(math.log(3))
    assert markov_variance(uniform) == pytest.approx(0.0, abs=1e-15)
    assert markov_capacity(uniform) == pytest.approx(0.0, abs=1e-15)
    perm = MarkovNoise([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    assert markov_capacity(perm) == pytest.approx(math.log(3))


def test_iid_rows_reduce_to_letter_variance():
    q = np.array([0.7, 0.2, 0.1])
    noise = MarkovNoise(np.tile(q, (3, 1)))
    surprisal = -np.log(q)
    var = float(np.dot(q, surprisal ** 2) - np.dot(q, surprisal) ** 2)
    assert entropy_rate(noise) == pytest.approx(entropy(q), abs=1e-14)
    for lag in (1, 3, None):
        assert markov_variance(noise, lag) == pytest.approx(var, abs=1e-13)


def test_lag_sums_converge_to_full_variance():
    full = markov_variance(FLIP, None)
    values = [markov_variance(FLIP, k) for k in (1, 2, 5, 20, 60)]
    assert abs(values[-1] - full) < 1e-9  # second eigenvalue 0.7 sets the decay
    assert exact_block_variance(FLIP, 5000) == pytest.approx(full, rel=1e-3)
    # The printed two-term form drops the higher-lag covariances.
    assert full - values[0] > 0.05


def test_block_variance_against_enumeration():
    n = 8  # symbols x_1..x_{n+1}: n transitions from a stationary start
    q, pi = FLIP.transition, FLIP.stationary.probs
    values, weights = [], []
    for seq in itertools.product(range(2), repeat=n + 1):
        p = pi[seq[0]]
        s = 0.0
        for a, b in zip(seq, seq[1:]):
            p *= q[a, b]
            s -= math.log(q[a, b])
        values.append(s)
        weights.append(p)
    values, weights = np.array(values), np.array(weights)
    mean = np.dot(weights, values)
    var = np.dot(weights, (values - mean) ** 2)
    assert exact_block_variance(FLIP, n) == pytest.approx(var / n, rel=1e-12)


def test_second_order_and_error():
    v = markov_variance(FLIP)
    assert markov_second_order(FLIP, 0.5) == 0.0
    assert markov_second_order(FLIP, 0.05) == pytest.approx(-1.6448536269514729 * math.sqrt(v),
                                                             rel=1e-12)
    assert markov_error(FLIP, 0.0) == 0.5
    uniform = MarkovNoise(np.full((2, 2), 0.5))
    assert markov_second_order(uniform, 0.1) == -math.inf
    assert markov_second_order(uniform, 0.9) == math.inf
    with pytest.raises(DomainError):
        markov_second_order(FLIP, 1.0)


def _brute_force_sum(noise, n, alpha, start):
    q = noise.transition
    total = 0.0
    for seq in itertools.product(range(noise.d), repeat=n):
        p = start[seq[0]]
        for a, b in zip(seq, seq[1:]):
            p *= q[a, b]
        total += p ** alpha
    return math.log(total)


@pytest.mark.parametrize("initial", ["stationary", "uniform"])
def test_powered_sum_matches_enumeration(initial):
    start = FLIP.stationary.probs if initial == "stationary" else np.array([0.5, 0.5])
    for n in (1, 2, 7, 12):
        assert log_powered_sum(FLIP, n, 1 / 1.1, initial) == pytest.approx(
            _brute_force_sum(FLIP, n, 1 / 1.1, start), abs=1e-12)


def test_psi_consistency_at_larger_n():
    # n = 64 computed directly and by chaining the n = 32 transfer operator with itself.
    alpha = 1 / 1.1
    powered = FLIP.transition ** alpha
    start = FLIP.stationary.probs ** alpha
    vec = start @ np.linalg.matrix_power(powered, 63)
    assert log_powered_sum(FLIP, 64, alpha) == pytest.approx(math.log(vec.sum()), abs=1e-12)
    assert markov_gallager_psi(FLIP, 64, 0.0) == 0.0


def test_psi_iid_factorises():
    q = np.array([0.85, 0.15])
    noise = MarkovNoise(np.tile(q, (2, 1)))
    # Additive noise: W_x(y) = q(y - x), and the uniform input is optimal.
    w = np.array([[q[0], q[1]], [q[1], q[0]]])
    for s in (0.1, 0.5, 1.0):
        assert markov_gallager_psi(noise, 40, s) == pytest.approx(psi(w, [0.5, 0.5], s),
                                                                  abs=1e-12)


def test_n_psi_is_convex_in_s():
    s = np.linspace(0.0, 1.0, 21)
    vals = np.array([50 * markov_gallager_psi(FLIP, 50, x) for x in s])
    mids = np.array([50 * markov_gallager_psi(FLIP, 50, x) for x in (s[:-1] + s[1:]) / 2])
    assert np.all(mids <= (vals[:-1] + vals[1:]) / 2 + 1e-12)


def test_scaled_gallager_min_approaches_full_variance_limit():
    target = -1.0 / (2 * markov_variance(FLIP, None))
    values = [markov_scaled_gallager_min(FLIP, -1.0, n) for n in (100, 1000, 10_000)]
    errors = [abs(v - target) for v in values]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] / abs(target) < 0.10


def test_scaled_gallager_min_misses_two_term_limit():
    # Recorded discrepancy: against the printed lag-1 variance the limit is off by >10%.
    lag1_target = -1.0 / (2 * markov_variance(FLIP, 1))
    value = markov_scaled_gallager_min(FLIP, -1.0, 10_000)
    assert abs(value - lag1_target) / abs(lag1_target) > 0.10


def test_monte_carlo_is_deterministic_and_sane():
    a = monte_carlo_variance(FLIP, n=2000, replicas=50, seed=5)
    b = monte_carlo_variance(FLIP, n=2000, replicas=50, seed=5)
    assert a == b
    var, se = a
    assert se > 0
    assert abs(var - exact_block_variance(FLIP, 2000)) < 5 * se
