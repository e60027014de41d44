"""
Stability-penalty-bias matching learning rates.

Rule 2 is the explicit update used by the live agents; Rule 1 is the
implicit variant kept for the functional checks. ``eval_F``, ``eval_G1``
and ``eval_G2`` evaluate the regret functionals the two rules are matched
against.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from spblab import settings
from spblab.models.simple_schemas import SpbSequences, SpbState
from spblab.utils.errors import DomainError, GammaTooLarge, NumericError

logger = logging.getLogger(__name__)

# slack on the 1/2 contracts so exact boundary values pass
RATE_SLACK = 1e-12


def _finite(*values: float):
    for value in values:
        if not math.isfinite(value):
            raise DomainError(f"non-finite input {value}")


def _increment(beta: float, z: float, u: float) -> float:
    """2 sqrt(z/beta) + u/beta with 0/0 read as 0."""
    stability = 2.0 * math.sqrt(z / beta) if z > 0 else 0.0
    bias = u / beta if u > 0 else 0.0
    return stability + bias


def rule2_update(state: SpbState, z_prev: float, u_prev: float) -> float:
    """Advance ``state`` by one explicit SPB-matching step and return the new beta."""
    _finite(z_prev, u_prev, state.beta, state.last_h)
    if z_prev < 0 or u_prev < 0:
        raise DomainError(f"z and u must be non-negative, got z={z_prev}, u={u_prev}")
    if not state.last_h > 0:
        raise DomainError("rule 2 needs a positive entropy estimate; call observe_entropy first")
    if not state.beta > 0:
        raise DomainError(f"beta must be positive, got {state.beta}")
    state.beta = state.beta + _increment(state.beta, z_prev, u_prev) / state.last_h
    state.round += 1
    return state.beta


def rule1_update(beta_prev: float, h_hat: float, z: float, u: float) -> float:
    """Solve beta = beta_prev + (2 sqrt(z/beta) + u/beta) / h_hat for beta >= beta_prev."""
    _finite(beta_prev, h_hat, z, u)
    if h_hat <= 0:
        raise DomainError(f"h_hat must be positive, got {h_hat}")
    if beta_prev < 0 or z < 0 or u < 0:
        raise DomainError("beta_prev, z and u must be non-negative")
    if z == 0 and u == 0:
        return float(beta_prev)

    root_z = math.sqrt(z)

    def residual(beta: float) -> float:
        return beta - beta_prev - (2.0 * root_z / math.sqrt(beta) + u / beta) / h_hat

    lo = beta_prev if beta_prev > 0 else 1e-200
    hi = max(beta_prev, 1.0) + (2.0 * root_z + u) / h_hat + 1.0
    try:
        beta = brentq(residual, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    except (RuntimeError, ValueError) as e:
        raise NumericError(f"rule 1 root search failed: {e}")
    gap = abs(residual(beta))
    if gap > settings.RULE1_TOL * max(1.0, beta):
        raise NumericError("rule 1 fixed point residual above tolerance", gap)
    return float(beta)


class Exploration(NamedTuple):
    gamma: float
    gamma_prime: float


def exploration_rate(z: float, u: float, beta: float) -> Exploration:
    """gamma = sqrt(z/beta) + u/beta, which must not exceed 1/2."""
    _finite(z, u, beta)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    gamma_prime = math.sqrt(z / beta) if z > 0 else 0.0
    gamma = gamma_prime + (u / beta if u > 0 else 0.0)
    if gamma > 0.5 + RATE_SLACK:
        raise GammaTooLarge(gamma)
    return Exploration(gamma, gamma_prime)


# Functionals

def _arrays(*sequences):
    arrays = [np.asarray(s, dtype=float).ravel() for s in sequences]
    if len({a.size for a in arrays}) > 1:
        raise DomainError(f"sequences have unequal lengths {[a.size for a in arrays]}")
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DomainError("sequences must be finite")
    return arrays


def _ratio_sum(numer: np.ndarray, denom: np.ndarray) -> float:
    mask = numer > 0
    return float(np.sum(numer[mask] / denom[mask]))


def eval_G1(z, h) -> float:
    """sum_t sqrt(z_t) / (sum_{s<=t} sqrt(z_s)/h_s)^{1/3}."""
    z, h = _arrays(z, h)
    if np.any(z < 0) or np.any(h <= 0):
        raise DomainError("need z >= 0 and h > 0")
    root = np.sqrt(z)
    return _ratio_sum(root, np.cbrt(np.cumsum(root / h)))


def eval_G2(u, h) -> float:
    """sum_t u_t / sqrt(sum_{s<=t} u_s/h_s)."""
    u, h = _arrays(u, h)
    if np.any(u < 0) or np.any(h <= 0):
        raise DomainError("need u >= 0 and h > 0")
    return _ratio_sum(u, np.sqrt(np.cumsum(u / h)))


def eval_F(seq: SpbSequences) -> float:
    """Stability + bias + penalty, with beta_0 = 0."""
    beta = seq.beta_seq
    if np.any(beta < 0):
        raise DomainError("beta sequence must be non-negative")
    stability = 2.0 * np.sqrt(_safe_divide(seq.z, beta))
    bias = _safe_divide(seq.u, beta)
    penalty = np.diff(beta, prepend=0.0) * seq.h
    return float(np.sum(stability + bias + penalty))


def _safe_divide(numer: np.ndarray, denom: np.ndarray) -> np.ndarray:
    out = np.zeros_like(numer)
    mask = numer > 0
    out[mask] = numer[mask] / denom[mask]
    return out


# Trajectories

def _pad_h_hat(h_hat: np.ndarray, T: int) -> np.ndarray:
    if h_hat.size == T and T > 0:
        return np.append(h_hat, h_hat[-1])
    if h_hat.size != T + 1:
        raise DomainError(f"h_hat needs {T} or {T + 1} entries, got {h_hat.size}")
    return h_hat


def rule1_trajectory(z, u, h_hat, beta0: float = 0.0) -> np.ndarray:
    """beta_{1:T} under Rule 1 starting from beta_0."""
    z, u, h_hat = _arrays(z, u, h_hat)
    beta = np.empty(z.size)
    prev = beta0
    for t in range(z.size):
        prev = rule1_update(prev, h_hat[t], z[t], u[t])
        beta[t] = prev
    return beta


def rule2_trajectory(z, u, h_hat, beta1: float) -> np.ndarray:
    """beta_{1:T} under Rule 2; h_hat is indexed 1..T+1 (h_hat[t] plays the role of h_hat_{t+1})."""
    z, u = _arrays(z, u)
    h_hat = _pad_h_hat(np.asarray(h_hat, dtype=float).ravel(), z.size)
    if not beta1 > 0:
        raise DomainError(f"beta1 must be positive, got {beta1}")
    beta = np.empty(z.size)
    current = float(beta1)
    for t in range(z.size):
        beta[t] = current
        current = current + _increment(current, z[t], u[t]) / h_hat[t + 1]
    return beta


def rule2_lower_bounds(z, u, h_hat, beta1: float):
    """Per-round lower bounds on beta_t^{3/2} and beta_t^2 implied by Rule 2."""
    z, u = _arrays(z, u)
    h_hat = _pad_h_hat(np.asarray(h_hat, dtype=float).ravel(), z.size)
    if z.size == 0:
        return np.zeros(0), np.zeros(0)
    steps32 = 2.0 * np.sqrt(z[:-1]) / h_hat[1:z.size]
    steps2 = u[:-1] / h_hat[1:z.size]
    bound32 = beta1 ** 1.5 + np.concatenate([[0.0], np.cumsum(steps32)])
    bound2 = beta1 ** 2 + np.concatenate([[0.0], np.cumsum(steps2)])
    return bound32, bound2


def rule1_lower_bounds(z, u, h_hat):
    z, u, h_hat = _arrays(z, u, h_hat)
    return 2.0 * np.cumsum(np.sqrt(z) / h_hat), np.cumsum(u / h_hat)


@dataclass(frozen=True)
class BetaBoundReport:
    holds: bool
    worst_slack32: float
    worst_slack2: float


def check_beta_lower_bounds(beta_seq, z, u, h_hat, rule: int, beta1: Optional[float] = None) -> BetaBoundReport:
    beta = np.asarray(beta_seq, dtype=float).ravel()
    if rule == 1:
        bound32, bound2 = rule1_lower_bounds(z, u, h_hat)
    elif rule == 2:
        bound32, bound2 = rule2_lower_bounds(z, u, h_hat, beta1 if beta1 is not None else beta[0])
    else:
        raise DomainError(f"rule must be 1 or 2, got {rule}")
    if beta.size == 0:
        return BetaBoundReport(True, 0.0, 0.0)
    rtol = 1e-9
    slack32 = beta ** 1.5 - bound32
    slack2 = beta ** 2 - bound2
    holds = bool(np.all(slack32 >= -rtol * np.maximum(1.0, bound32))
                 and np.all(slack2 >= -rtol * np.maximum(1.0, bound2)))
    return BetaBoundReport(holds, float(slack32.min()), float(slack2.min()))


# Lemma checks

@dataclass(frozen=True)
class Lemma1Report:
    rule: int
    F: float
    G1: float
    G2: float
    rhs: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.F


def check_lemma1(z, u, h_hat, rule: int, beta1: float = 1.0, beta_seq=None) -> Lemma1Report:
    """Generate beta by the rule and compare F against its G1/G2 bound.

    h_t is taken equal to h_hat_t. For Rule 2 a length-T h_hat is extended
    by repeating its last entry.
    """
    z, u = _arrays(z, u)
    h_hat = np.asarray(h_hat, dtype=float).ravel()
    T = z.size
    if rule == 1:
        h_hat = _arrays(h_hat)[0]
        if h_hat.size != T:
            raise DomainError(f"rule 1 needs {T} h_hat entries, got {h_hat.size}")
        beta = rule1_trajectory(z, u, h_hat) if beta_seq is None else np.asarray(beta_seq, dtype=float)
        F = eval_F(SpbSequences(z, u, h_hat, beta)) if T else 0.0
        G1 = eval_G1(z, h_hat)
        G2 = eval_G2(u, h_hat)
        rhs = 3.2 * G1 + 2.0 * G2
    elif rule == 2:
        if T == 0:
            return Lemma1Report(2, 0.0, 0.0, 0.0, 0.0, True)
        h_hat = _pad_h_hat(h_hat, T)
        beta = rule2_trajectory(z, u, h_hat, beta1) if beta_seq is None else np.asarray(beta_seq, dtype=float)
        F = eval_F(SpbSequences(z, u, h_hat[:T], beta))
        G1 = eval_G1(z, h_hat[1:])
        G2 = eval_G2(u, h_hat[1:])
        rhs = (4.0 * G1 + 3.0 * G2 + 10.0 * math.sqrt(z.max() / beta1) + 5.0 * u.max() / beta1
               + beta1 * h_hat[0])
    else:
        raise DomainError(f"rule must be 1 or 2, got {rule}")
    holds = F <= rhs * (1 + settings.INVARIANT_RTOL) + 1e-12
    return Lemma1Report(rule, F, G1, G2, rhs, holds)


@dataclass(frozen=True)
class Lemma2Report:
    J: int
    G1: float
    partition_bound: float
    min_bound: float
    j0_bound: float
    holds: bool


def check_lemma2(z, h, J: int) -> Lemma2Report:
    """G1 against the dyadic partition bound, its min-form and the J = 0 form, with theta_j = 2^-j h_max."""
    z, h = _arrays(z, h)
    if J < 0:
        raise DomainError(f"J must be non-negative, got {J}")
    T = z.size
    if T == 0:
        return Lemma2Report(J, 0.0, 0.0, 0.0, 0.0, True)
    g1 = eval_G1(z, h)
    h_max = float(h.max())
    z_max = float(z.max())
    root = np.sqrt(z)
    theta = h_max * 2.0 ** -np.arange(J + 1)

    partition = 0.0
    for j in range(1, J + 2):
        if j <= J:
            members = (h <= theta[j - 1]) & (h > theta[j])
        else:
            members = h <= theta[J]
        partition += (math.sqrt(theta[j - 1]) * root[members].sum()) ** (2.0 / 3.0)
    partition *= 1.5

    j0 = 1.5 * (root.sum() * math.sqrt(h_max)) ** (2.0 / 3.0)
    first = ((math.sqrt(2 * J) * np.sum(np.sqrt(z * h))) ** (2.0 / 3.0)
             + (2.0 ** (-J / 2) * math.sqrt(z_max * h_max)) ** (2.0 / 3.0) * T ** (2.0 / 3.0))
    min_bound = min(1.5 * first, j0)

    tol = settings.INVARIANT_RTOL
    holds = all(g1 <= bound * (1 + tol) + 1e-12 for bound in (partition, min_bound, j0))
    return Lemma2Report(J, g1, partition, min_bound, j0, holds)


@dataclass(frozen=True)
class Theorem3Report:
    rule: int
    eps: float
    F: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.F / self.rhs
        return 0.0 if self.F == 0 else math.inf


def eval_theorem3(z, u, h_hat, rule: int, beta1: float, eps: float, beta_seq=None) -> Theorem3Report:
    """F against the eps-indexed right-hand side with all hidden constants set to one."""
    z, u = _arrays(z, u)
    h_hat = np.asarray(h_hat, dtype=float).ravel()
    T = z.size
    if T == 0:
        return Theorem3Report(rule, eps, 0.0, 0.0)
    if eps < 1.0 / T:
        raise DomainError(f"eps must be at least 1/T = {1.0 / T}, got {eps}")
    if rule == 1:
        if h_hat.size != T:
            raise DomainError(f"rule 1 needs {T} h_hat entries, got {h_hat.size}")
        beta = rule1_trajectory(z, u, h_hat) if beta_seq is None else np.asarray(beta_seq, dtype=float)
        F = eval_F(SpbSequences(z, u, h_hat, beta))
        h_round = h_hat
    elif rule == 2:
        h_hat = _pad_h_hat(h_hat, T)
        beta = rule2_trajectory(z, u, h_hat, beta1) if beta_seq is None else np.asarray(beta_seq, dtype=float)
        F = eval_F(SpbSequences(z, u, h_hat[:T], beta))
        h_round = h_hat[1:]
    else:
        raise DomainError(f"rule must be 1 or 2, got {rule}")

    h_max = float(h_hat.max())
    z_max, u_max = float(z.max()), float(u.max())
    log_term = max(0.0, math.log(eps * T))
    stab = min((np.sum(np.sqrt(z * h_round * log_term))) ** (2.0 / 3.0)
               + (math.sqrt(z_max * h_max) / eps) ** (2.0 / 3.0),
               (np.sum(np.sqrt(z * h_max))) ** (2.0 / 3.0))
    bias = min(math.sqrt(np.sum(u * h_round) * log_term) + math.sqrt(u_max * h_max / eps),
               math.sqrt(np.sum(u) * h_max))
    rhs = float(stab + bias)
    if rule == 2:
        rhs += math.sqrt(z_max / beta1) + u_max / beta1 + beta1 * h_hat[0]
    return Theorem3Report(rule, eps, F, rhs)


def random_sequences(rng: np.random.Generator, T: int, h_floor: float = 1e-3):
    """z, u, h drawn from Uniform(0,1], with h floored."""
    z = 1.0 - rng.random(T)
    u = 1.0 - rng.random(T)
    h = np.maximum(1.0 - rng.random(T), h_floor)
    return z, u, h
