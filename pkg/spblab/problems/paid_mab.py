"""
Multi-armed bandits with paid observations.

The agent plays q_t itself and buys each arm's loss independently with
probability r_t; the observation cost joins the regret.
"""

import math
from typing import Optional, Tuple

import numpy as np

from spblab.models.simple_schemas import PaidConfig, ProbVector
from spblab.problems.base import Problem, RoundOutcome, default_alpha
from spblab.utils.errors import DomainError, RTooLarge
from spblab.utils.simplex_ftrl import stability_mass
from spblab.utils.spb_rate import RATE_SLACK


def paid_rate(z: float, u: float, beta: float) -> float:
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    r = (math.sqrt(z / beta) if z > 0 else 0.0) + (u / beta if u > 0 else 0.0)
    if r > 0.5 + RATE_SLACK:
        raise RTooLarge(r)
    return r


def draw_observation_set(r: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of the arms whose Bernoulli(r) coin came up."""
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"observation rate must lie in [0,1], got {r}")
    return np.flatnonzero(rng.random(k) < r)


def paid_loss_estimate(r: float, observed, losses, k: int) -> np.ndarray:
    """losses_i / r on the observed arms; ``losses`` aligns with ``observed``."""
    estimate = np.zeros(k)
    observed = np.asarray(observed, dtype=int)
    if observed.size == 0:
        return estimate
    if r <= 0:
        raise DomainError("arms were observed at rate zero")
    estimate[observed] = np.asarray(losses, dtype=float) / r
    return estimate


def paid_zu(q: ProbVector, alpha: float, cfg: PaidConfig) -> Tuple[float, float]:
    mass, gap = stability_mass(q, alpha)
    z = 4.0 * cfg.cost * cfg.k / (1.0 - alpha) * mass
    u = 8.0 * max(cfg.cost, 1.0) / (1.0 - alpha) * gap ** (1.0 - alpha)
    return z, u


def paid_round_cost(observed, cost: float) -> float:
    return len(observed) * cost


def paid_config(k: int, cost: float, alpha: Optional[float] = None, beta1: Optional[float] = None,
                beta_bar: Optional[float] = None) -> PaidConfig:
    """PaidConfig with any missing parameter set to its default."""
    alpha = alpha if alpha is not None else default_alpha(k)
    if beta1 is None:
        beta1 = 64.0 * max(cost, 1.0) * k / (1.0 - alpha)
    if beta_bar is None:
        beta_bar = 32.0 * k * math.sqrt(cost) / ((1.0 - alpha) ** 2 * math.sqrt(beta1))
    return PaidConfig(k=k, cost=cost, alpha=alpha, beta1=beta1, beta_bar=beta_bar)


class PaidProblem(Problem):
    name = "paid"
    mixes = False

    def __init__(self, cfg: PaidConfig):
        self.cfg = cfg
        self.k = cfg.k
        self.alpha = cfg.alpha
        self.beta1 = cfg.beta1
        self.beta_bar = cfg.beta_bar

    def zu(self, q: ProbVector):
        return paid_zu(q, self.alpha, self.cfg)

    def rate(self, z: float, u: float, beta: float) -> float:
        return paid_rate(z, u, beta)

    def observe(self, action: int, p: ProbVector, rate: float, draw, rng) -> RoundOutcome:
        observed = draw_observation_set(rate, self.k, rng)
        estimate = paid_loss_estimate(rate, observed, np.asarray(draw)[observed], self.k)
        return RoundOutcome(estimate, paid_round_cost(observed, self.cfg.cost), observed.size)

    def magnitude_bound(self, rate: float) -> float:
        return 1.0 / rate if rate > 0 else 0.0

    def describe(self) -> dict:
        info = super().describe()
        info["cost"] = self.cfg.cost
        return info
