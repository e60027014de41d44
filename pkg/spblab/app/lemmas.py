"""
Randomised certification of the learning-rate inequalities and the
auxiliary Tsallis bounds. Every check is exact arithmetic on generated
sequences or instances; any failure is a bug, not noise.
"""

import logging
import math
from typing import Dict, List

import numpy as np

from spblab.models.schemas import CheckSummary, LemmaReport, RatioSummary
from spblab.models.simple_schemas import HybridRegularizer
from spblab.utils.environments import StreamRole, make_rng
from spblab.utils.simplex_ftrl import (check_entropy_growth, check_stability_bound, check_tsallis_upper,
                                       entropy_growth_limits, ftrl_solve, leader_and_gap, stability_loss_limit)
from spblab.utils.spb_rate import (check_beta_lower_bounds, check_lemma1, check_lemma2, eval_theorem3,
                                   random_sequences, rule1_trajectory, rule2_trajectory)

logger = logging.getLogger(__name__)

LEMMA2_J = (0, 1, 2, 3)


class _Tally:
    def __init__(self):
        self.passes = 0
        self.total = 0
        self.worst = math.inf

    def add(self, holds: bool, slack: float):
        self.total += 1
        self.passes += int(holds)
        self.worst = min(self.worst, slack)

    def summary(self) -> CheckSummary:
        return CheckSummary(passes=self.passes, total=self.total,
                            worst_slack=self.worst if self.total else 0.0)


def _ratios(values: Dict[str, List[float]]) -> List[RatioSummary]:
    return [RatioSummary(eps=label, max_ratio=float(max(r)), mean_ratio=float(np.mean(r)))
            for label, r in values.items() if r]


def _tsallis_instance(rng: np.random.Generator):
    k = int(rng.integers(2, 9))
    alpha = float(rng.uniform(0.05, 0.95))
    q = rng.dirichlet(np.ones(k))
    q = np.maximum(q, 1e-6)
    return k, alpha, q / q.sum()


def _aux_checks(rng: np.random.Generator, upper: _Tally, stability: _Tally, growth: _Tally):
    k, alpha, q = _tsallis_instance(rng)
    report = check_tsallis_upper(q, alpha, int(rng.integers(k)))
    upper.add(report.holds, report.proof_bound - report.entropy)

    _, gap = leader_and_gap(q)
    loss = stability_loss_limit(gap, alpha) * rng.uniform(-1.0, 1.0, k)
    report = check_stability_bound(q, loss, alpha)
    stability.add(report.holds, report.bound - report.value)

    beta = float(rng.uniform(0.5, 5.0))
    beta_bar = float(rng.uniform(0.0, 5.0))
    cumulative = rng.uniform(0.0, 5.0, k)
    base = ftrl_solve(cumulative, HybridRegularizer(alpha, beta, beta_bar))
    _, gap = leader_and_gap(base)
    loss_limit, growth_limit = entropy_growth_limits(gap, alpha, beta, beta_bar)
    loss = 0.99 * loss_limit * rng.uniform(-1.0, 1.0, k)
    beta_next = beta + 0.99 * growth_limit * rng.random()
    report = check_entropy_growth(cumulative, loss, alpha, beta, beta_next, beta_bar)
    if report.preconditions:
        growth.add(report.holds, 2.0 * report.h_before - report.h_after)


def verify_lemmas(seed: int, instances: int, horizon: int = 200) -> LemmaReport:
    """Drive every checker over ``instances`` random sequences of length ``horizon``."""
    rng = make_rng(seed, 0, StreamRole.ENV)
    rule1, rule2, bounds, stress = _Tally(), _Tally(), _Tally(), _Tally()
    lemma2 = {J: _Tally() for J in LEMMA2_J}
    upper, stability, growth = _Tally(), _Tally(), _Tally()
    eps_grid = {"1/T": 1.0 / horizon, "1": 1.0, "T^1/4": horizon ** 0.25}
    ratios_r1 = {label: [] for label in eps_grid}
    ratios_r2 = {label: [] for label in eps_grid}

    for _ in range(instances):
        z, u, h = random_sequences(rng, horizon)
        beta1 = float(rng.uniform(0.1, 10.0))

        beta_r1 = rule1_trajectory(z, u, h)
        beta_r2 = rule2_trajectory(z, u, h, beta1)

        report = check_lemma1(z, u, h, rule=1, beta_seq=beta_r1)
        rule1.add(report.holds, report.slack)
        report = check_lemma1(z, u, h, rule=2, beta1=beta1, beta_seq=beta_r2)
        rule2.add(report.holds, report.slack)

        for J in LEMMA2_J:
            report = check_lemma2(z, h, J)
            lemma2[J].add(report.holds, min(report.partition_bound, report.min_bound, report.j0_bound) - report.G1)

        b1 = check_beta_lower_bounds(beta_r1, z, u, h, rule=1)
        b2 = check_beta_lower_bounds(beta_r2, z, u, h, rule=2, beta1=beta1)
        bounds.add(b1.holds and b2.holds, min(b1.worst_slack32, b1.worst_slack2, b2.worst_slack32, b2.worst_slack2))

        for label, eps in eps_grid.items():
            ratios_r1[label].append(eval_theorem3(z, u, h, 1, beta1, eps, beta_r1).ratio)
            ratios_r2[label].append(eval_theorem3(z, u, h, 2, beta1, eps, beta_r2).ratio)

        _aux_checks(rng, upper, stability, growth)

    # degenerate and spiky sequences
    zeros = np.zeros(horizon)
    spiky = np.where(np.arange(horizon) % 2 == 0, 1.0, 1e-6)
    for z, u, h in ((zeros, zeros, np.ones(horizon)), (np.ones(horizon), np.ones(horizon), spiky)):
        for report in (check_lemma1(z, u, h, rule=1), check_lemma1(z, u, h, rule=2, beta1=1.0)):
            stress.add(report.holds, report.slack)
        report = check_lemma2(z, h, 2)
        stress.add(report.holds, report.j0_bound - report.G1)

    summaries = [rule1.summary(), rule2.summary(), bounds.summary(), upper.summary(), stability.summary(),
                 growth.summary(), stress.summary()] + [t.summary() for t in lemma2.values()]
    all_passed = all(s.passes == s.total for s in summaries)
    logger.info("lemma verification: %d instances, all passed=%s", instances, all_passed)
    return LemmaReport(
        instances=instances,
        seed=seed,
        horizon=horizon,
        lemma1_rule1=rule1.summary(),
        lemma1_rule2=rule2.summary(),
        lemma2={f"J={J}": t.summary() for J, t in lemma2.items()},
        beta_bounds=bounds.summary(),
        theorem3_rule1=_ratios(ratios_r1),
        theorem3_rule2=_ratios(ratios_r2),
        tsallis_upper=upper.summary(),
        stability=stability.summary(),
        entropy_growth=growth.summary(),
        stress=stress.summary(),
        all_passed=all_passed,
    )
