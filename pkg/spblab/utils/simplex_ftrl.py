"""
FTRL over the probability simplex with the hybrid Tsallis regularizer

    q = argmin_p <L, p> + beta * (-H_alpha(p)) + beta_bar * (-H_{1-alpha}(p))

together with the entropy / Bregman primitives it relies on and numeric
checkers for the auxiliary Tsallis lemmas used by the regret analysis.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from spblab import settings
from spblab.models.simple_schemas import HybridRegularizer, ProbVector
from spblab.utils.errors import DomainError, NumericError

logger = logging.getLogger(__name__)

LOG_FLOOR = float(np.log(settings.PROB_FLOOR))

VectorLike = Union[ProbVector, np.ndarray, list, tuple]


def _weights(p: VectorLike) -> np.ndarray:
    if isinstance(p, ProbVector):
        return p.weights
    return ProbVector(p).weights


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0,1), got {alpha}")


def tsallis_entropy(p: VectorLike, alpha: float) -> float:
    """H_alpha(p) = (1/alpha) * sum_i (p_i^alpha - p_i)."""
    _check_alpha(alpha)
    w = _weights(p)
    return float(max(0.0, (np.power(w, alpha) - w).sum() / alpha))


def max_tsallis_entropy(k: int, alpha: float) -> float:
    """Entropy of the uniform distribution, (1/alpha)(k^{1-alpha} - 1)."""
    _check_alpha(alpha)
    return (k ** (1.0 - alpha) - 1.0) / alpha


def tsallis_gradient(q: VectorLike, alpha: float) -> np.ndarray:
    """Gradient of -H_alpha at an interior point."""
    _check_alpha(alpha)
    w = _weights(q)
    if np.any(w <= 0):
        raise DomainError("gradient of -H_alpha is undefined on the simplex boundary")
    return 1.0 / alpha - np.power(w, alpha - 1.0)


def bregman_tsallis(p: VectorLike, q: VectorLike, alpha: float) -> float:
    """D_{-H_alpha}(p, q); q must be interior."""
    wp = _weights(p)
    wq = _weights(q)
    if wp.size != wq.size:
        raise DomainError(f"dimension mismatch {wp.size} != {wq.size}")
    grad = tsallis_gradient(wq, alpha)
    value = -tsallis_entropy(wp, alpha) + tsallis_entropy(wq, alpha) - float(grad @ (wp - wq))
    return max(0.0, value)


def leader_and_gap(q: VectorLike) -> Tuple[int, float]:
    """Index of the largest weight (smallest index on ties) and min(q_lead, 1 - q_lead)."""
    w = _weights(q)
    leader = int(np.argmax(w))
    return leader, float(min(w[leader], 1.0 - w[leader]))


@dataclass(frozen=True)
class FtrlSolution:
    q: ProbVector
    dual: float
    residual: float
    iterations: int
    # offset mu = beta/alpha + beta_bar/alpha_bar - dual for the min-shifted losses; reusable as a warm start
    mu: float


def _inner_solve(c: np.ndarray, reg: HybridRegularizer):
    """Solve beta*q^(alpha-1) + beta_bar*q^(-alpha) = c coordinate-wise in x = ln q.

    The left side is convex and decreasing in x, so Newton started below the
    root climbs monotonically onto it.
    """
    alpha, beta, beta_bar = reg.alpha, reg.beta, reg.beta_bar
    x = np.log(c / beta) / (alpha - 1.0)
    if beta_bar > 0:
        x = np.maximum(x, -np.log(c / beta_bar) / alpha)
    x = np.maximum(x, LOG_FLOOR)
    for _ in range(settings.FTRL_INNER_ITERS):
        a_term = beta * np.exp((alpha - 1.0) * x)
        b_term = beta_bar * np.exp(-alpha * x)
        phi = a_term + b_term - c
        dphi = (alpha - 1.0) * a_term - alpha * b_term
        step = -phi / dphi
        x_new = np.maximum(x + step, LOG_FLOOR)
        if np.max(np.abs(x_new - x)) <= 1e-14:
            x = x_new
            break
        x = x_new
    else:
        raise NumericError("inner FTRL solve did not converge", float(np.max(np.abs(phi))))
    a_term = beta * np.exp((alpha - 1.0) * x)
    b_term = beta_bar * np.exp(-alpha * x)
    dphi = (alpha - 1.0) * a_term - alpha * b_term
    return x, dphi


def solve_kkt(cumulative_loss, reg: HybridRegularizer, mu_hint: Optional[float] = None) -> FtrlSolution:
    """Minimise the FTRL objective by a safeguarded Newton search on the dual variable."""
    losses = np.asarray(cumulative_loss, dtype=float)
    if losses.ndim != 1 or losses.size < 2:
        raise DomainError(f"need a loss vector with k >= 2 entries, got shape {losses.shape}")
    if not np.all(np.isfinite(losses)):
        raise DomainError("cumulative losses must be finite")
    k = losses.size
    shift = losses.min()
    shifted = losses - shift
    alpha, beta, beta_bar = reg.alpha, reg.beta, reg.beta_bar

    # sum_i q_i(mu) is decreasing in mu; at lo the leader has q = 1, at hi it has q = 1/k
    lo = beta + beta_bar
    hi = beta * k ** (1.0 - alpha) + beta_bar * k ** alpha
    if mu_hint is not None and lo < mu_hint < hi:
        mu = float(mu_hint)
    else:
        mu = 0.5 * (lo + hi)

    for iteration in range(1, settings.FTRL_OUTER_ITERS + 1):
        x, dphi = _inner_solve(shifted + mu, reg)
        q = np.exp(x)
        excess = q.sum() - 1.0
        if abs(excess) <= 1e-14 * k:
            break
        if excess > 0:
            lo = mu
        else:
            hi = mu
        slope = float(np.sum(q / dphi))
        candidate = mu - excess / slope if slope < 0 else np.nan
        mu = candidate if lo < candidate < hi else 0.5 * (lo + hi)
        if hi - lo <= 4e-16 * hi:
            break
    else:
        raise NumericError("FTRL dual search did not converge", abs(excess))

    q = q / q.sum()
    stationarity = shifted + beta * (1.0 / alpha - np.power(q, alpha - 1.0))
    if beta_bar > 0:
        stationarity = stationarity + beta_bar * (1.0 / reg.alpha_bar - np.power(q, -alpha))
    active = q > settings.PROB_FLOOR * (1.0 + 1e-9)
    if not np.any(active):
        active = np.ones(k, dtype=bool)
    top, bottom = stationarity[active].max(), stationarity[active].min()
    dual = 0.5 * (top + bottom)
    residual = 0.5 * (top - bottom)
    # absolute below unit scale; large cumulative losses only resolve to a relative 1e-8
    scale = max(1.0, float(np.abs(stationarity[active]).max()), mu)
    if residual > settings.KKT_TOL * scale:
        raise NumericError("FTRL stationarity residual above tolerance", residual)
    logger.debug("ftrl_solve k=%d iterations=%d residual=%.2e", k, iteration, residual)
    return FtrlSolution(q=ProbVector(q), dual=float(dual + shift), residual=float(residual),
                        iterations=iteration, mu=float(mu))


def ftrl_solve(cumulative_loss, reg: HybridRegularizer) -> ProbVector:
    return solve_kkt(cumulative_loss, reg).q


# Auxiliary Tsallis bounds

@dataclass(frozen=True)
class TsallisUpperReport:
    entropy: float
    proof_bound: float
    statement_bound: float
    holds: bool


def check_tsallis_upper(q: VectorLike, alpha: float, i_star: int) -> TsallisUpperReport:
    """H_alpha(q) <= (1/alpha)(k-1)^{1-alpha}(1-q_{i*})^alpha.

    The statement-side exponent (k-1)^alpha is reported alongside; only the
    derived exponent is asserted.
    """
    w = _weights(q)
    k = w.size
    entropy = tsallis_entropy(w, alpha)
    rest = max(0.0, 1.0 - w[i_star]) ** alpha
    proof_bound = (k - 1) ** (1.0 - alpha) * rest / alpha
    statement_bound = (k - 1) ** alpha * rest / alpha
    return TsallisUpperReport(entropy, proof_bound, statement_bound,
                              entropy <= proof_bound * (1 + settings.INVARIANT_RTOL) + 1e-12)


@dataclass(frozen=True)
class StabilityReport:
    precondition: bool
    value: float
    bound: float
    holds: bool


def stability_loss_limit(gap: float, alpha: float) -> float:
    """Largest |l_i| the stability bound admits at leader gap ``gap``."""
    return (1.0 - alpha) / 4.0 * gap ** (alpha - 1.0) if gap > 0 else np.inf


def check_stability_bound(q: VectorLike, loss, alpha: float) -> StabilityReport:
    """max_p <l, q - p> - D(p, q) against (4/(1-alpha))(sum_{i!=lead} q_i^{2-alpha} l_i^2 + q_*^{2-alpha} l_lead^2)."""
    w = _weights(q)
    loss = np.asarray(loss, dtype=float)
    leader, gap = leader_and_gap(w)
    precondition = bool(np.all(np.abs(loss) <= stability_loss_limit(gap, alpha)))
    # maximiser solves FTRL with cumulative loss l - grad(-H)(q), beta = 1
    target = loss - tsallis_gradient(w, alpha)
    p = solve_kkt(target, HybridRegularizer(alpha, 1.0, 0.0)).q
    value = float(loss @ (w - p.weights)) - bregman_tsallis(p, w, alpha)
    mass = np.power(w, 2.0 - alpha) * loss ** 2
    mass[leader] = gap ** (2.0 - alpha) * loss[leader] ** 2
    bound = 4.0 / (1.0 - alpha) * float(mass.sum())
    return StabilityReport(precondition, value, bound, value <= bound + 1e-10)


@dataclass(frozen=True)
class EntropyGrowthReport:
    loss_condition: bool
    beta_condition: bool
    h_before: float
    h_after: float
    holds: bool

    @property
    def preconditions(self) -> bool:
        return self.loss_condition and self.beta_condition


def entropy_growth_limits(gap: float, alpha: float, beta: float, beta_bar: float) -> Tuple[float, float]:
    """(max |l_i|, max beta_next - beta) under which one FTRL step at most doubles H_alpha."""
    alpha_bar = 1.0 - alpha
    root2 = np.sqrt(2.0)
    loss_limit = max((1 - root2 ** (alpha - 1)) / 2 * gap ** (alpha - 1) * beta,
                     (1 - root2 ** (alpha_bar - 1)) / 2 * gap ** (alpha_bar - 1) * beta_bar)
    growth_limit = max((1 - root2 ** (alpha - 1)) * beta,
                       (1 - root2 ** (alpha_bar - 1)) / root2 * gap ** (alpha_bar - alpha) * beta_bar)
    return float(loss_limit), float(growth_limit)


def check_entropy_growth(cumulative_loss, loss, alpha: float, beta: float, beta_next: float,
                         beta_bar: float) -> EntropyGrowthReport:
    """Whether one FTRL step at most doubles H_alpha, with the step-size preconditions evaluated."""
    loss = np.asarray(loss, dtype=float)
    q = ftrl_solve(cumulative_loss, HybridRegularizer(alpha, beta, beta_bar))
    r = ftrl_solve(np.asarray(cumulative_loss, dtype=float) + loss,
                   HybridRegularizer(alpha, beta_next, beta_bar))
    _, gap = leader_and_gap(q)
    loss_limit, growth_limit = entropy_growth_limits(gap, alpha, beta, beta_bar)
    h_before = tsallis_entropy(q, alpha)
    h_after = tsallis_entropy(r, alpha)
    return EntropyGrowthReport(
        loss_condition=bool(np.max(np.abs(loss)) <= loss_limit),
        beta_condition=bool(0.0 <= beta_next - beta <= growth_limit),
        h_before=h_before,
        h_after=h_after,
        holds=h_after <= 2.0 * h_before * (1 + settings.INVARIANT_RTOL),
    )


def stability_mass(q: VectorLike, alpha: float) -> Tuple[float, float]:
    """(sum_{i != lead} q_i^{2-alpha} + q_*^{2-alpha}, q_*), the shape shared by every z_t and u_t."""
    w = _weights(q)
    leader, gap = leader_and_gap(w)
    powered = np.power(w, 2.0 - alpha)
    return float(powered.sum() - powered[leader] + gap ** (2.0 - alpha)), gap
