"""
Feedback graphs: observability classes, the fractional domination LP, the
importance-weighted graph estimator and the weakly observable agent.
"""

import logging
import math
from dataclasses import replace
from itertools import combinations
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from spblab.models.simple_schemas import FeedbackGraph, ObservabilityClass, ProbVector
from spblab.problems.base import Problem, RoundOutcome, default_alpha
from spblab.utils.errors import DomainError, Infeasible
from spblab.utils.linalg_lp import lp_solve
from spblab.utils.simplex_ftrl import stability_mass
from spblab.utils.spb_rate import exploration_rate

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 10


def classify_observability(graph: FeedbackGraph) -> ObservabilityClass:
    everyone = set(range(graph.k))
    strong = True
    for i in range(graph.k):
        observers = set(graph.in_neighbors[i])
        if not observers:
            return ObservabilityClass.NON_OBSERVABLE
        if i not in observers and not (everyone - {i}) <= observers:
            strong = False
    return ObservabilityClass.STRONG if strong else ObservabilityClass.WEAK


def fractional_domination(graph: FeedbackGraph) -> Tuple[float, np.ndarray, ProbVector]:
    """delta* = min sum x subject to every vertex receiving at least unit weight from its observers."""
    k = graph.k
    if any(len(nb) == 0 for nb in graph.in_neighbors):
        raise DomainError("graph is not observable; the domination LP is infeasible")
    cover = graph.adjacency().T
    try:
        solution = lp_solve(np.ones(k), [(cover, np.ones(k), ">=")], [(0.0, 1.0)] * k)
    except Infeasible as e:
        raise DomainError(f"domination LP infeasible: {e}")
    x_star = np.clip(solution.x, 0.0, 1.0)
    if np.min(cover @ x_star) < 1.0 - 1e-8:
        raise DomainError("domination LP solution fails the coverage re-check")
    delta_star = float(x_star.sum())
    return delta_star, x_star, ProbVector(x_star / delta_star)


def analyze_graph(graph: FeedbackGraph) -> FeedbackGraph:
    """Copy of ``graph`` with class, delta*, x* and u filled in (delta* only when observable)."""
    obs_class = classify_observability(graph)
    if obs_class == ObservabilityClass.NON_OBSERVABLE:
        return replace(graph, obs_class=obs_class)
    delta_star, x_star, u_dist = fractional_domination(graph)
    return replace(graph, obs_class=obs_class, delta_star=delta_star, x_star=x_star, u_dist=u_dist)


def observation_probabilities(graph: FeedbackGraph, p: ProbVector) -> np.ndarray:
    """P_i = sum of p over the observers of i."""
    return graph.adjacency().T @ p.weights


def graph_loss_estimate(graph: FeedbackGraph, chosen: int, observed: Dict[int, float], p: ProbVector) -> np.ndarray:
    P = observation_probabilities(graph, p)
    if np.any(P <= 0):
        raise DomainError(f"vertex {int(np.argmin(P)) + 1} has zero observation probability")
    estimate = np.zeros(graph.k)
    for j in graph.out_neighbors[chosen]:
        estimate[j] = observed[j] / P[j]
    return estimate


def estimator_second_moment(graph: FeedbackGraph, p: ProbVector, losses) -> np.ndarray:
    """E[estimate_i^2] by enumerating the chosen action."""
    losses = np.asarray(losses, dtype=float)
    moment = np.zeros(graph.k)
    for j in range(graph.k):
        if p[j] > 0:
            observed = {i: losses[i] for i in graph.out_neighbors[j]}
            moment += p[j] * graph_loss_estimate(graph, j, observed, p) ** 2
    return moment


def graph_zu(q: ProbVector, alpha: float, delta_star: float) -> Tuple[float, float]:
    mass, gap = stability_mass(q, alpha)
    z = 4.0 * delta_star / (1.0 - alpha) * mass
    u = 8.0 * delta_star / (1.0 - alpha) * gap ** (1.0 - alpha)
    return z, u


def _smallest_dominating(graph: FeedbackGraph, targets: Iterable[int]) -> int:
    targets = list(targets)
    if not targets:
        return 0
    if graph.k > EXHAUSTIVE_LIMIT:
        raise DomainError(f"exhaustive domination search is limited to k <= {EXHAUSTIVE_LIMIT}")
    observers = [set(graph.in_neighbors[j]) for j in targets]
    if any(not s for s in observers):
        raise DomainError("some vertex has no observer")
    for size in range(1, graph.k + 1):
        for subset in combinations(range(graph.k), size):
            chosen = set(subset)
            if all(s & chosen for s in observers):
                return size
    raise DomainError("no dominating set found")


def integer_domination_number(graph: FeedbackGraph) -> int:
    """Smallest vertex set observing every vertex."""
    return _smallest_dominating(graph, range(graph.k))


def weak_domination_number(graph: FeedbackGraph) -> int:
    """Smallest vertex set observing every weakly observable vertex."""
    everyone = set(range(graph.k))
    weak = [i for i in range(graph.k)
            if i not in graph.in_neighbors[i] and not (everyone - {i}) <= set(graph.in_neighbors[i])]
    return _smallest_dominating(graph, weak)


class GraphProblem(Problem):
    """Graph bandit with exploration drawn from the normalised domination solution."""

    name = "graph"

    def __init__(self, graph: FeedbackGraph, alpha: Optional[float] = None, beta1: Optional[float] = None,
                 beta_bar: Optional[float] = None):
        if graph.delta_star is None:
            graph = analyze_graph(graph)
        if graph.obs_class == ObservabilityClass.NON_OBSERVABLE:
            raise DomainError("graph is not observable")
        if graph.obs_class == ObservabilityClass.STRONG:
            logger.warning("graph is strongly observable; running the weakly observable agent anyway")
        self.graph = graph
        self.k = graph.k
        self.delta_star = graph.delta_star
        self.alpha = alpha if alpha is not None else default_alpha(self.k)
        self.beta1 = beta1 if beta1 is not None else 64.0 * self.delta_star / (1.0 - self.alpha)
        if beta_bar is None:
            beta_bar = (32.0 * math.sqrt(self.k * self.delta_star)
                        / ((1.0 - self.alpha) ** 2 * math.sqrt(self.beta1)))
        self.beta_bar = beta_bar
        self.p0 = graph.u_dist

    def zu(self, q: ProbVector):
        return graph_zu(q, self.alpha, self.delta_star)

    def rate(self, z: float, u: float, beta: float) -> float:
        return exploration_rate(z, u, beta).gamma

    def observe(self, action: int, p: ProbVector, rate: float, draw, rng) -> RoundOutcome:
        observed = {j: float(draw[j]) for j in self.graph.out_neighbors[action]}
        return RoundOutcome(graph_loss_estimate(self.graph, action, observed, p), observed=len(observed))

    def magnitude_bound(self, rate: float) -> float:
        return self.delta_star / rate if rate > 0 else math.inf

    def coverage(self, p: ProbVector, rate: float):
        return float(observation_probabilities(self.graph, p).min()), rate / self.delta_star

    def describe(self) -> dict:
        info = super().describe()
        info["delta_star"] = self.delta_star
        return info
