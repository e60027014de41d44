"""
Oblivious loss and outcome generators for the stochastic, switching
adversarial and corrupted regimes.

Loss-vector problems (graph and paid bandits) draw Bernoulli losses per
arm; partial monitoring draws an outcome index. ``profile`` returns the
expected per-arm losses of a round, which is what pseudo-regret is
measured against.
"""

import logging
from enum import IntEnum
from typing import Optional, Tuple, Union

import numpy as np

from spblab.models.schemas import EnvSpec, Regime
from spblab.utils.errors import DomainError

logger = logging.getLogger(__name__)


class StreamRole(IntEnum):
    ENV = 0
    AGENT = 1


def make_rng(seed: int, replicate: int, role: StreamRole) -> np.random.Generator:
    """PCG64 stream for one (seed, replicate, role); streams are independent."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(replicate), int(role)))
    return np.random.Generator(np.random.PCG64(sequence))


class Environment:
    """One replicate's view of an EnvSpec.

    ``loss_matrix`` switches the environment to partial monitoring: draws
    are outcome indices and expected arm losses are loss_matrix @ dist.
    """

    def __init__(self, spec: EnvSpec, k: int, loss_matrix: Optional[np.ndarray] = None):
        self.spec = spec
        self.k = k
        self.loss_matrix = None if loss_matrix is None else np.asarray(loss_matrix, dtype=float)
        self.is_pm = self.loss_matrix is not None
        if self.is_pm and self.loss_matrix.shape[0] != k:
            raise DomainError(f"loss matrix has {self.loss_matrix.shape[0]} rows, expected {k}")
        self.d = self.loss_matrix.shape[1] if self.is_pm else None

        if spec.regime == Regime.ADVERSARIAL_SWITCHING:
            self._phases = [self._base_vector(p.means, p.outcome_dist) for p in spec.phases]
            self._lengths = np.array([p.length for p in spec.phases])
            self._cycle = int(self._lengths.sum())
            self._base = None
        else:
            self._base = self._base_vector(spec.means, spec.outcome_dist)

        self.budget = spec.corruption_budget if spec.regime == Regime.CORRUPTED else 0
        self.optimal_arm = None
        self.decoy = None
        self.corrupt_outcome = None
        if self.budget > 0:
            self._setup_corruption()

    def _base_vector(self, means, outcome_dist) -> np.ndarray:
        if self.is_pm:
            if outcome_dist is None:
                raise DomainError("partial monitoring environments need outcome_dist")
            vector = np.asarray(outcome_dist, dtype=float)
            if vector.size != self.d:
                raise DomainError(f"outcome_dist has {vector.size} entries, game has d={self.d}")
        else:
            if means is None:
                raise DomainError("loss-vector environments need means")
            vector = np.asarray(means, dtype=float)
            if vector.size != self.k:
                raise DomainError(f"means has {vector.size} entries, expected k={self.k}")
        return vector

    def _arm_losses(self, vector: np.ndarray) -> np.ndarray:
        return self.loss_matrix @ vector if self.is_pm else vector

    def _setup_corruption(self):
        base_losses = self._arm_losses(self._base)
        order = np.argsort(base_losses, kind="stable")
        self.optimal_arm = int(order[0])
        if self.spec.decoy is not None:
            decoy = self.spec.decoy - 1
            if not 0 <= decoy < self.k or decoy == self.optimal_arm:
                raise DomainError(f"decoy {self.spec.decoy} must be an arm other than {self.optimal_arm + 1}")
            self.decoy = decoy
        else:
            self.decoy = int(order[1])
        if self.is_pm:
            gap = self.loss_matrix[self.optimal_arm] - self.loss_matrix[self.decoy]
            self.corrupt_outcome = int(np.argmax(gap))

    def _corrupted(self, t: int) -> bool:
        return t <= self.budget

    def distribution(self, t: int) -> np.ndarray:
        """Base mean vector (or outcome distribution) active at round t, before corruption."""
        if t < 1:
            raise DomainError(f"rounds are 1-based, got t={t}")
        if self._base is not None:
            return self._base
        position = (t - 1) % self._cycle
        phase = int(np.searchsorted(np.cumsum(self._lengths), position, side="right"))
        return self._phases[phase]

    def profile(self, t: int) -> np.ndarray:
        """Expected per-arm losses at round t."""
        if self._corrupted(t):
            if self.is_pm:
                return self.loss_matrix[:, self.corrupt_outcome].copy()
            means = self._base.copy()
            means[self.optimal_arm] = 1.0
            means[self.decoy] = 0.0
            return means
        return self._arm_losses(self.distribution(t))

    def draw(self, t: int, rng: np.random.Generator) -> Union[np.ndarray, int]:
        """Loss vector in {0,1}^k, or an outcome index for partial monitoring."""
        vector = self.distribution(t)
        if self.is_pm:
            outcome = int(np.searchsorted(np.cumsum(vector), rng.random(), side="right"))
            outcome = min(outcome, self.d - 1)
            return self.corrupt_outcome if self._corrupted(t) else outcome
        losses = (rng.random(self.k) < vector).astype(float)
        if self._corrupted(t):
            losses[self.optimal_arm] = 1.0
            losses[self.decoy] = 0.0
        return losses

    def comparator(self, horizon: int) -> Tuple[int, np.ndarray]:
        """Best fixed arm over the horizon and its per-round expected losses."""
        if horizon <= 0:
            return 0, np.zeros(0)
        profiles = self.profiles(horizon)
        totals = profiles.sum(axis=0)
        # ties up to summation error go to the smallest index
        best = int(np.flatnonzero(totals <= totals.min() + 1e-9 * horizon)[0])
        return best, profiles[:, best]

    def profiles(self, horizon: int) -> np.ndarray:
        return np.array([self.profile(t) for t in range(1, horizon + 1)]).reshape(horizon, self.k)


def next_loss(env: Environment, t: int, rng: np.random.Generator):
    return env.draw(t, rng)


def comparator_loss(env: Environment, horizon: int) -> Tuple[int, np.ndarray]:
    return env.comparator(horizon)
