import math
from typing import NamedTuple, Optional

import numpy as np

from spblab.models.simple_schemas import ProbVector
from spblab.utils.errors import DomainError


def default_alpha(k: int) -> float:
    """1 - 1/ln k for k >= 3; ln 2 < 1 would push k = 2 outside (0,1), so it gets 1/2."""
    if k < 2:
        raise DomainError(f"need at least two actions, got {k}")
    if k == 2:
        return 0.5
    return 1.0 - 1.0 / math.log(k)


class RoundOutcome(NamedTuple):
    estimate: np.ndarray
    round_cost: float = 0.0
    observed: int = 0


class Problem:
    """Per-problem hooks used by the BOBW loop.

    Subclasses fix the action count, the FTRL parameters, the exploration
    distribution ``p0`` and how a round's feedback turns into a loss
    estimate.
    """

    name = "problem"
    k: int
    alpha: float
    beta1: float
    beta_bar: float
    p0: Optional[ProbVector] = None
    # paid observations replace forced exploration by an observation rate
    mixes = True

    def zu(self, q: ProbVector):
        raise NotImplementedError

    def rate(self, z: float, u: float, beta: float) -> float:
        raise NotImplementedError

    def action_distribution(self, q: ProbVector, rate: float) -> ProbVector:
        if not self.mixes:
            return q
        weights = (1.0 - rate) * q.weights + rate * self.p0.weights
        return ProbVector(weights / weights.sum())

    def observe(self, action: int, p: ProbVector, rate: float, draw, rng: np.random.Generator) -> RoundOutcome:
        raise NotImplementedError

    def realized_loss(self, action: int, draw) -> float:
        return float(draw[action])

    def magnitude_bound(self, rate: float) -> float:
        """Bound on max_i |estimate_i| implied by the exploration rate."""
        raise NotImplementedError

    def describe(self) -> dict:
        return {"problem": self.name, "k": self.k, "alpha": self.alpha,
                "beta1": self.beta1, "beta_bar": self.beta_bar}

    def coverage(self, p: ProbVector, rate: float):
        """(min_i P_i, floor) for problems whose mixing guarantees an observation floor, else None."""
        return None
