import math

import numpy as np
import pytest

from spblab.models.simple_schemas import SpbSequences, SpbState
from spblab.utils.errors import DomainError, GammaTooLarge
from spblab.utils.spb_rate import (check_beta_lower_bounds, check_lemma1, check_lemma2, eval_F, eval_G1, eval_G2,
                                   eval_theorem3, exploration_rate, random_sequences, rule1_trajectory,
                                   rule1_update, rule2_trajectory, rule2_update)


def state_at(beta: float, h_hat: float) -> SpbState:
    state = SpbState(alpha=0.5, beta1=beta, beta_bar=0.0)
    state.observe_entropy(h_hat)
    return state


@pytest.mark.parametrize("beta, h_hat, z, u, expected", [
    (1.0, 1.0, 1.0, 0.0, 3.0),
    (1.0, 1.0, 0.0, 0.0, 1.0),
    (4.0, 2.0, 4.0, 8.0, 6.0),
])
def test_rule2_examples(beta, h_hat, z, u, expected):
    state = state_at(beta, h_hat)
    assert rule2_update(state, z, u) == pytest.approx(expected)
    assert state.beta == pytest.approx(expected)
    assert state.round == 1


def test_rule2_needs_entropy():
    state = SpbState(alpha=0.5, beta1=1.0, beta_bar=0.0)
    with pytest.raises(DomainError):
        rule2_update(state, 1.0, 1.0)
    state.observe_entropy(1.0)
    with pytest.raises(DomainError):
        rule2_update(state, math.nan, 0.0)


def test_state_starts_at_beta1():
    assert SpbState(alpha=0.3, beta1=7.0, beta_bar=1.0).beta == 7.0
    with pytest.raises(DomainError):
        SpbState(alpha=0.3, beta1=0.0, beta_bar=1.0)


def test_rule1_fixed_point_without_increment():
    assert rule1_update(2.5, 1.0, 0.0, 0.0) == 2.5


def test_rule1_from_zero():
    assert rule1_update(0.0, 1.0, 1.0, 0.0) == pytest.approx(2.0 ** (2.0 / 3.0), abs=1e-6)


def test_rule1_matches_bisection():
    lo, hi = 1.0, 1.0 + 3.0 + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - 1.0 - (2.0 / math.sqrt(mid) + 1.0 / mid) > 0:
            hi = mid
        else:
            lo = mid
    assert rule1_update(1.0, 1.0, 1.0, 1.0) == pytest.approx(0.5 * (lo + hi), abs=1e-8)


def test_rule1_residual(rng):
    for _ in range(100):
        beta_prev = float(rng.uniform(0.0, 10.0))
        h_hat = float(rng.uniform(1e-3, 2.0))
        z, u = rng.uniform(0.0, 5.0, 2)
        beta = rule1_update(beta_prev, h_hat, z, u)
        assert beta >= beta_prev
        assert abs(beta - beta_prev - (2 * math.sqrt(z / beta) + u / beta) / h_hat) <= 1e-10 * max(1.0, beta)


def test_exploration_rate_examples():
    assert exploration_rate(1.0, 0.0, 4.0) == (pytest.approx(0.5), pytest.approx(0.5))
    assert exploration_rate(0.0, 2.0, 4.0) == (pytest.approx(0.5), 0.0)
    with pytest.raises(GammaTooLarge) as excinfo:
        exploration_rate(4.0, 2.0, 16.0)
    assert excinfo.value.gamma == pytest.approx(0.625)


def test_G1_examples():
    assert eval_G1([1.0], [1.0]) == pytest.approx(1.0)
    assert eval_G1(np.ones(8), np.ones(8)) == pytest.approx(5.2749, abs=1e-3)
    assert eval_G1([], []) == 0.0
    assert eval_G1([0.0, 0.0, 1.0], [1.0, 1.0, 1.0]) == pytest.approx(1.0)


def test_G2_examples():
    assert eval_G2([1.0], [1.0]) == pytest.approx(1.0)
    assert eval_G2(np.ones(4), np.ones(4)) == pytest.approx(2.78446, abs=1e-4)
    assert eval_G2(np.zeros(5), np.ones(5)) == 0.0


def test_functionals_reject_bad_input():
    with pytest.raises(DomainError):
        eval_G1([1.0, 2.0], [1.0])
    with pytest.raises(DomainError):
        eval_G2([1.0], [0.0])


def test_G_prefix_grows_with_its_last_term(rng):
    # raising a middle term also grows every later denominator, so only the
    # prefix ending at the raised round is monotone
    for _ in range(50):
        z, u, h = random_sequences(rng, 30)
        t = int(rng.integers(30))
        bumped_z, bumped_u = z[: t + 1].copy(), u[: t + 1].copy()
        bumped_z[t] += 0.3
        bumped_u[t] += 0.3
        assert eval_G1(bumped_z, h[: t + 1]) > eval_G1(z[: t + 1], h[: t + 1])
        assert eval_G2(bumped_u, h[: t + 1]) > eval_G2(u[: t + 1], h[: t + 1])


def test_G2_total_can_drop_when_a_middle_term_grows():
    h = np.array([1.0, 0.01, 1.0])
    u, bumped = np.array([1.0, 0.0, 1.0]), np.array([1.0, 1.0, 1.0])
    assert eval_G2(u, h) == pytest.approx(1 + 1 / math.sqrt(2))
    assert eval_G2(bumped, h) == pytest.approx(1 + 1 / math.sqrt(101) + 1 / math.sqrt(102))
    assert eval_G2(bumped, h) < eval_G2(u, h)


def test_F_examples():
    assert eval_F(SpbSequences([1.0], [1.0], [1.0], [2.0])) == pytest.approx(2 / math.sqrt(2) + 2.5, rel=1e-12)
    beta = np.array([1.0, 1.5, 1.5, 4.0])
    zeros = np.zeros(4)
    assert eval_F(SpbSequences(zeros, zeros, np.ones(4), beta)) == pytest.approx(4.0)


def test_F_matches_term_by_term_sum(rng):
    for _ in range(20):
        z, u, h = random_sequences(rng, 40)
        beta = np.cumsum(rng.uniform(0.1, 1.0, 40))
        expected, previous = 0.0, 0.0
        for t in range(40):
            expected += 2 * math.sqrt(z[t] / beta[t]) + u[t] / beta[t] + (beta[t] - previous) * h[t]
            previous = beta[t]
        assert eval_F(SpbSequences(z, u, h, beta)) == pytest.approx(expected, rel=1e-10)


def test_trajectories_non_decreasing(rng):
    z, u, h = random_sequences(rng, 100)
    assert np.all(np.diff(rule1_trajectory(z, u, h)) >= 0)
    assert np.all(np.diff(rule2_trajectory(z, u, h, 1.0)) >= 0)


def test_beta_lower_bounds(rng):
    for _ in range(30):
        z, u, h = random_sequences(rng, 80)
        assert check_beta_lower_bounds(rule1_trajectory(z, u, h), z, u, h, rule=1).holds
        assert check_beta_lower_bounds(rule2_trajectory(z, u, h, 2.0), z, u, h, rule=2, beta1=2.0).holds


def test_lemma1_constant_sequences():
    ones = np.ones(100)
    report = check_lemma1(ones, ones, ones, rule=1)
    assert report.holds
    assert report.slack > 0


def test_lemma1_empty_horizon():
    report = check_lemma1([], [], [], rule=1)
    assert report.holds
    assert report.F == 0.0 and report.rhs == 0.0


@pytest.mark.parametrize("rule", [1, 2])
def test_lemma1_random(rng, rule):
    for _ in range(100):
        z, u, h = random_sequences(rng, 200)
        assert check_lemma1(z, u, h, rule=rule, beta1=1.0).holds


def test_lemma1_unknown_rule():
    with pytest.raises(DomainError):
        check_lemma1([1.0], [1.0], [1.0], rule=3)


def test_lemma2_constant_sequence():
    report = check_lemma2(np.ones(8), np.ones(8), 0)
    assert report.j0_bound == pytest.approx(6.0)
    assert report.G1 == pytest.approx(5.2749, abs=1e-3)
    assert report.holds


def test_lemma2_zero_stability():
    report = check_lemma2(np.zeros(10), np.ones(10), 2)
    assert report.G1 == 0.0
    assert report.j0_bound == 0.0
    assert report.holds


@pytest.mark.parametrize("J", [0, 1, 2, 3])
def test_lemma2_random(rng, J):
    for _ in range(100):
        z, _, h = random_sequences(rng, 200)
        assert check_lemma2(z, h, J).holds


def test_theorem3_eps_range(rng):
    z, u, h = random_sequences(rng, 50)
    with pytest.raises(DomainError):
        eval_theorem3(z, u, h, 1, 1.0, 1e-3)
    report = eval_theorem3(z, u, h, 2, 1.0, 1.0)
    assert report.F > 0 and report.rhs > 0
    assert math.isfinite(report.ratio)
