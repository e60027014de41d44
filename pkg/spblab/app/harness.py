"""
The best-of-both-worlds loop, experiment orchestration and regret fits.

Every round: FTRL on the (min-shifted) cumulative estimated losses, the
problem's (z, u) and exploration or observation rate, sampling, loss
estimation and a Rule-2 step with h_hat_{t+1} = h_t. Pseudo-regret is
computed from the environment's expected losses, not from realised
draws.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from spblab import settings
from spblab.database.trace_store import game_from_file, graph_from_file, load_game, load_graph
from spblab.models.schemas import CheckpointStat, ExperimentConfig, ExperimentSummary, FitResult, ProblemKind, \
    ViolationRecord
from spblab.models.simple_schemas import ProbVector, RegretTrace, SpbState, Violation
from spblab.problems.base import Problem
from spblab.problems.graph_bandits import GraphProblem
from spblab.problems.paid_mab import PaidProblem, paid_config
from spblab.problems.pm_games import PmProblem
from spblab.utils.environments import Environment, StreamRole, make_rng
from spblab.utils.errors import ContractError, DomainError, InvariantViolation
from spblab.utils.simplex_ftrl import solve_kkt, tsallis_entropy
from spblab.utils.spb_rate import rule2_update

logger = logging.getLogger(__name__)

FIT_MIN_T = 2 ** 10
FIT_MAX_T = 2 ** 16


def build_problem(config: ExperimentConfig) -> Problem:
    overrides = dict(alpha=config.alpha, beta1=config.beta1, beta_bar=config.beta_bar)
    if config.problem == ProblemKind.PM:
        game = game_from_file(config.game) if config.game is not None else load_game(config.instance)
        return PmProblem(game, **overrides)
    if config.problem == ProblemKind.GRAPH:
        graph = graph_from_file(config.graph) if config.graph is not None else load_graph(config.instance)
        return GraphProblem(graph, **overrides)
    k = config.arms if config.arms is not None else len(config.env.means)
    return PaidProblem(paid_config(k, config.cost, **overrides))


def build_environment(config: ExperimentConfig, problem: Problem) -> Environment:
    loss_matrix = problem.game.loss if isinstance(problem, PmProblem) else None
    return Environment(config.env, problem.k, loss_matrix)


class _Monitor:
    """Collects invariant violations for one replicate; strict mode raises on the first."""

    def __init__(self, trace: RegretTrace, strict: bool):
        self.trace = trace
        self.strict = strict
        self._seen = set()

    def check(self, ok: bool, t: int, name: str, detail: str):
        if ok:
            return
        if self.strict:
            raise InvariantViolation(t, name, detail)
        self.trace.violations.append(Violation(t, name, detail))
        if name not in self._seen:
            self._seen.add(name)
            logger.warning("replicate %d round %d: %s violated (%s)", self.trace.replicate, t, name, detail)


def _sample(p: ProbVector, rng: np.random.Generator) -> int:
    action = int(np.searchsorted(np.cumsum(p.weights), rng.random(), side="right"))
    return min(action, p.k - 1)


def run_bobw(config: ExperimentConfig, replicate: int = 0, problem: Optional[Problem] = None,
             strict: bool = False) -> RegretTrace:
    """One replicate of the loop; returns its per-round trace."""
    problem = problem if problem is not None else build_problem(config)
    horizon = config.horizon
    trace = RegretTrace.empty(horizon, replicate, config.seed)
    if horizon <= 0:
        return trace

    env = build_environment(config, problem)
    env_rng = make_rng(config.seed, replicate, StreamRole.ENV)
    agent_rng = make_rng(config.seed, replicate, StreamRole.AGENT)
    expected = env.profiles(horizon)
    best, comparator = env.comparator(horizon)

    k, alpha = problem.k, problem.alpha
    state = SpbState(alpha=alpha, beta1=problem.beta1, beta_bar=problem.beta_bar)
    monitor = _Monitor(trace, strict)
    rtol = settings.INVARIANT_RTOL
    cumulative = np.zeros(k)
    mu_hint = None
    h_first = h_prev = None
    bound32, bound2 = state.beta ** 1.5, state.beta ** 2

    for t in range(1, horizon + 1):
        i = t - 1
        solution = solve_kkt(cumulative - cumulative.min(), state.regularizer(), mu_hint)
        mu_hint = solution.mu
        q = solution.q
        h = tsallis_entropy(q, alpha)
        z, u = problem.zu(q)
        try:
            rate = problem.rate(z, u, state.beta)
        except ContractError as e:
            if strict:
                raise
            monitor.check(False, t, "rate", str(e))
            rate = 0.5
        p = problem.action_distribution(q, rate)
        action = _sample(p, agent_rng)
        draw = env.draw(t, env_rng)
        outcome = problem.observe(action, p, rate, draw, agent_rng)

        mean = expected[i]
        overhead = float(mean @ (p.weights - q.weights))
        trace.action[i] = action
        trace.loss[i] = problem.realized_loss(action, draw)
        trace.comparator[i] = comparator[i]
        trace.beta[i] = state.beta
        trace.h[i] = h
        trace.gamma[i] = rate
        trace.round_cost[i] = outcome.round_cost
        trace.inst_regret[i] = float(mean @ p.weights) - comparator[i] + outcome.round_cost

        if h_first is None:
            h_first = h
        monitor.check(h <= h_first * (1 + rtol), t, "entropy_cap", f"h={h:.6g} > h_1={h_first:.6g}")
        if h_prev is not None:
            monitor.check(h <= 2.0 * h_prev * (1 + rtol), t, "entropy_growth",
                          f"h={h:.6g} > 2*{h_prev:.6g}")
        monitor.check(overhead <= 2.0 * rate + 1e-12, t, "mixing_overhead",
                      f"{overhead:.6g} > 2*gamma={2 * rate:.6g}")
        size = float(np.max(np.abs(outcome.estimate)))
        limit = problem.magnitude_bound(rate)
        monitor.check(size <= limit * (1 + rtol) + 1e-12, t, "estimate_magnitude",
                      f"|estimate|/beta={size / state.beta:.6g} > {limit / state.beta:.6g}")
        coverage = problem.coverage(p, rate)
        if coverage is not None:
            lowest, floor = coverage
            monitor.check(lowest >= floor * (1 - rtol), t, "observation_floor",
                          f"min P={lowest:.6g} < gamma/delta*={floor:.6g}")

        cumulative += outcome.estimate
        beta_before = state.beta
        state.observe_entropy(h)
        rule2_update(state, z, u)
        monitor.check(state.beta >= beta_before, t, "beta_monotone", f"{state.beta!r} < {beta_before!r}")
        bound32 += 2.0 * math.sqrt(z) / h
        bound2 += u / h
        monitor.check(state.beta ** 1.5 >= bound32 * (1 - rtol) and state.beta ** 2 >= bound2 * (1 - rtol),
                      t + 1, "beta_lower_bound", f"beta={state.beta:.6g}")
        h_prev = h

    logger.info("replicate %d: T=%d regret=%.4g violations=%d", replicate, horizon, trace.total_regret,
                len(trace.violations))
    return trace


def scaling_exponent(checkpoints: Sequence[Tuple[float, float]]) -> FitResult:
    """Least squares on (log T, log regret)."""
    if len(checkpoints) < 2:
        raise DomainError(f"need at least two checkpoints, got {len(checkpoints)}")
    T = np.array([c[0] for c in checkpoints], dtype=float)
    regret = np.array([c[1] for c in checkpoints], dtype=float)
    if np.any(T <= 0) or np.any(regret <= 0):
        raise DomainError("checkpoint horizons and regrets must be positive")
    fit = linregress(np.log(T), np.log(regret))
    return FitResult(slope=float(fit.slope), intercept=float(fit.intercept), r_squared=float(fit.rvalue ** 2))


def checkpoint_stats(cum_regret: np.ndarray, cum_cost: np.ndarray) -> List[CheckpointStat]:
    """Mean and spread across replicates (rows) at every power of two."""
    horizon = cum_regret.shape[1]
    stats = []
    t = 1
    while t <= horizon:
        column = cum_regret[:, t - 1]
        stats.append(CheckpointStat(T=t, mean_regret=float(column.mean()), std_regret=float(column.std()),
                                    mean_cost=float(cum_cost[:, t - 1].mean())))
        t *= 2
    return stats


def fit_checkpoints(stats: List[CheckpointStat], field: str = "regret") -> Optional[FitResult]:
    """Fit over checkpoints with FIT_MIN_T <= T <= FIT_MAX_T (all of them on short runs); None when fewer than two
    are positive."""
    def value(s: CheckpointStat) -> float:
        if field == "cost":
            return s.mean_cost
        if field == "loss":
            return s.mean_regret - s.mean_cost
        return s.mean_regret

    usable = [s for s in stats if FIT_MIN_T <= s.T <= FIT_MAX_T] or stats
    points = [(s.T, value(s)) for s in usable if value(s) > 0]
    if len(points) < 2:
        return None
    return scaling_exponent(points)


def run_experiment(config: ExperimentConfig, parallel: int = 1, strict: bool = False) -> Tuple[List[RegretTrace],
                                                                                               ExperimentSummary]:
    """All replicates of ``config`` and their summary; traces come back in replicate order."""
    started = time.perf_counter()
    problem = build_problem(config)
    run = partial(run_bobw, config, problem=problem, strict=strict)
    replicates = range(config.replicates)
    if parallel > 1 and config.replicates > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            traces = list(pool.map(run, replicates))
    else:
        traces = [run(r) for r in replicates]
    traces.sort(key=lambda tr: tr.replicate)

    cum_regret = np.array([tr.cum_regret for tr in traces]).reshape(len(traces), config.horizon)
    cum_cost = np.array([tr.cum_cost for tr in traces]).reshape(len(traces), config.horizon)
    stats = checkpoint_stats(cum_regret, cum_cost)
    paid = config.problem == ProblemKind.PAID
    summary = ExperimentSummary(
        problem=config.problem,
        regime=config.env.regime,
        horizon=config.horizon,
        replicates=config.replicates,
        seed=config.seed,
        alpha=problem.alpha,
        beta1=problem.beta1,
        beta_bar=problem.beta_bar,
        checkpoints=stats,
        fit=fit_checkpoints(stats),
        loss_fit=fit_checkpoints(stats, "loss") if paid else None,
        cost_fit=fit_checkpoints(stats, "cost") if paid else None,
        violations=[ViolationRecord(replicate=tr.replicate, round=v.round, name=v.name, detail=v.detail)
                    for tr in traces for v in tr.violations],
        runtime_seconds=time.perf_counter() - started,
    )
    return traces, summary
