import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fblcoding.capacity import (
    achiever_polytope,
    capacity,
    capacity_with_cost,
)
from fblcoding.channel import (
    CostFunction,
    DiscreteChannel,
    mutual_information,
    product_channel,
    row_divergences,
)
from fblcoding.errors import EmptyFeasibleSet, NonConvergence, SupportAmbiguity, ValidationError
from fblcoding.example_lab import build_example


def h(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


@pytest.mark.parametrize("p", [0.05, 0.11, 0.25])
def test_bsc_closed_form(p):
    start = time.perf_counter()
    r = capacity(DiscreteChannel.bsc(p))
    assert time.perf_counter() - start < 1.0
    assert abs(r.capacity - (math.log(2) - h(p))) <= 1e-9
    assert np.allclose(r.q_m.probs, 0.5)


@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_bec_closed_form(eps):
    r = capacity(DiscreteChannel.bec(eps))
    assert abs(r.capacity - (1 - eps) * math.log(2)) <= 1e-9


def test_identity_unique_vertex():
    w = DiscreteChannel.identity(2)
    r = capacity(w)
    assert r.capacity == pytest.approx(math.log(2), abs=1e-12)
    poly = achiever_polytope(w, r)
    assert len(poly.vertices) == 1
    assert np.allclose(poly.vertices[0].probs, 0.5)


def test_report_invariants_on_random_channels():
    rng = np.random.default_rng(3)
    for _ in range(25):
        w = rng.dirichlet(np.ones(4), size=3)
        r = capacity(w)
        assert r.gap <= 1e-10
        assert row_divergences(w, r.q_m.probs).max() <= r.capacity + 1e-10
        # a crude grid can never beat the solver
        grid = rng.dirichlet(np.ones(3), size=300)
        assert max(mutual_information(w, p) for p in grid) <= r.capacity + 1e-10


def test_nonconvergence_is_reported():
    w = np.array([[0.6, 0.3, 0.1], [0.1, 0.2, 0.7], [0.3, 0.4, 0.3]])
    with pytest.raises(NonConvergence):
        capacity(w, tol=1e-14, max_iterations=3)
    with pytest.raises(ValidationError):
        capacity(w, tol=0)


def test_cost_inactive_matches_unconstrained():
    w = DiscreteChannel.bsc(0.11)
    r = capacity_with_cost(w, CostFunction([0.0, 1.0], 1.0))
    assert r.capacity == pytest.approx(capacity(w).capacity, abs=1e-12)
    assert r.multiplier == 0.0


def test_cost_zero_budget_is_zero():
    r = capacity_with_cost(DiscreteChannel.bsc(0.11), CostFunction([0.0, 1.0], 0.0))
    assert r.capacity == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(r.achiever.probs, [1.0, 0.0])


def test_cost_active_matches_grid_oracle():
    w = DiscreteChannel.bsc(0.11)
    r = capacity_with_cost(w, CostFunction([0.0, 1.0], 0.25))
    grid = np.linspace(0.0, 0.25, 25_001)
    oracle = max(mutual_information(w, [1 - t, t]) for t in grid)
    assert r.capacity == pytest.approx(oracle, abs=1e-9)
    assert r.achiever.probs[1] == pytest.approx(0.25, abs=1e-6)
    assert r.multiplier > 0


def test_cost_monotone_in_budget():
    w = np.array([[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.2, 0.2, 0.6]])
    costs = [0.0, 1.0, 2.0]
    values = [capacity_with_cost(w, CostFunction(costs, k)).capacity
              for k in np.linspace(0.0, 2.0, 9)]
    assert all(b >= a - 1e-10 for a, b in zip(values, values[1:]))


def test_empty_feasible_set():
    with pytest.raises(EmptyFeasibleSet):
        CostFunction([1.0, 2.0], 0.5)


def test_example_polytope_is_the_displayed_segment():
    inst = build_example(0.3, 0.2)
    w = inst.channel.matrix
    poly = achiever_polytope(w, capacity(w))
    assert poly.support_set == (0, 1, 2, 3)
    a = (inst.q1 - inst.p2) / (inst.p1 - inst.p2)
    expected = [np.array([0.5, 0.5, 0, 0]), np.array([0, 0, a, 1 - a])]
    assert len(poly.vertices) == 2
    for e in expected:
        assert any(np.allclose(v.probs, e, atol=1e-7) for v in poly.vertices)
    for v in poly.vertices:
        assert abs(mutual_information(w, v) - poly.capacity) <= 1e-7
        assert np.max(np.abs(v.probs @ w - poly.q_m.probs)) <= 1e-7
        assert poly.contains(v.probs)


def test_support_ambiguity_is_raised():
    # Third letter sits just below the tight level: 1e-8 support tolerance cannot place it.
    w = np.array([[0.9, 0.1], [0.1, 0.9], [0.5, 0.5]])
    r = capacity(w)
    gap = r.capacity - row_divergences(w, r.q_m.probs)[2]
    with pytest.raises(SupportAmbiguity):
        achiever_polytope(w, r, support_tol=gap / 5)


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10_000))
def test_capacity_is_additive(seed):
    rng = np.random.default_rng(seed)
    w1 = rng.dirichlet(np.ones(3), size=2)
    w2 = rng.dirichlet(np.ones(2), size=3)
    joint = capacity(product_channel(w1, w2)).capacity
    assert joint == pytest.approx(capacity(w1).capacity + capacity(w2).capacity, abs=2e-10)
