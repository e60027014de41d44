"""
Partial monitoring: cell geometry, global observability and the in-tree
loss-difference estimator, plus the FTRL agent parameters for globally
observable games.
"""

import logging
import math
from collections import deque
from typing import Dict, List, Optional, Tuple

import numpy as np

from spblab import settings
from spblab.models.simple_schemas import Edge, PmGame, PmStructure, ProbVector
from spblab.problems.base import Problem, RoundOutcome, default_alpha
from spblab.utils.errors import (DisconnectedNeighborGraph, DomainError, DuplicateAction, Inconsistent,
                                 NonParetoAction, NotGloballyObservable)
from spblab.utils.linalg_lp import least_norm_solve, lp_solve
from spblab.utils.simplex_ftrl import stability_mass
from spblab.utils.spb_rate import exploration_rate

logger = logging.getLogger(__name__)

WTable = Dict[Tuple[int, int], float]


def _cell_margin(game: PmGame, a: int, rivals: List[int], tie: Optional[int] = None) -> float:
    """Largest s such that some outcome distribution u with u_x >= s makes a beat every rival by s.

    With ``tie`` set, u must also leave a and tie exactly level.
    """
    d = game.d
    loss = game.loss
    # variables (u_1..u_d, s); maximise s
    objective = np.zeros(d + 1)
    objective[-1] = 1.0
    rows = [np.append(loss[a] - loss[b], 1.0) for b in rivals]
    for x in range(d):
        row = np.zeros(d + 1)
        row[x] = -1.0
        row[-1] = 1.0
        rows.append(row)
    constraints = [(np.array(rows), np.zeros(len(rows)), "<="),
                   (np.append(np.ones(d), 0.0)[None, :], [1.0], "=")]
    if tie is not None:
        constraints.append((np.append(loss[a] - loss[tie], 0.0)[None, :], [0.0], "="))
    bounds = [(0.0, None)] * d + [(None, 1.0)]
    return lp_solve(objective, constraints, bounds, maximize=True).value


def validate_game(game: PmGame) -> np.ndarray:
    """Pareto flag per action; fails on duplicate rows or any non-Pareto action."""
    k = game.k
    for a in range(k):
        for b in range(a + 1, k):
            if np.array_equal(game.loss[a], game.loss[b]):
                raise DuplicateAction(a, b)
    pareto = np.zeros(k, dtype=bool)
    for a in range(k):
        margin = _cell_margin(game, a, [b for b in range(k) if b != a])
        pareto[a] = margin > settings.MARGIN_TOL
        logger.debug("action %d cell margin %.3e", a + 1, margin)
    for a in range(k):
        if not pareto[a]:
            raise NonParetoAction(a)
    return pareto


def neighbor_graph(game: PmGame, pareto: np.ndarray) -> List[Edge]:
    """Pairs of actions whose cells meet in a (d-2)-dimensional face."""
    k = game.k
    if not np.all(pareto):
        raise NonParetoAction(int(np.flatnonzero(~pareto)[0]))
    edges = []
    for a in range(k):
        for b in range(a + 1, k):
            rivals = [c for c in range(k) if c not in (a, b)]
            if _cell_margin(game, a, rivals, tie=b) > settings.MARGIN_TOL:
                edges.append((a, b))

    reached = _bfs_parents(k, edges, 0)
    if len(reached) < k:
        raise DisconnectedNeighborGraph(len(reached), k)
    return edges


def _bfs_parents(k: int, edges: List[Edge], root: int) -> Dict[int, Optional[int]]:
    adjacency = {i: [] for i in range(k)}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    parents = {root: None}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        for nxt in sorted(adjacency[node]):
            if nxt not in parents:
                parents[nxt] = node
                queue.append(nxt)
    return parents


def _observation_system(game: PmGame):
    """Columns indexed by (action, symbol), one row per outcome."""
    variables = [(c, s) for c in range(game.k) for s in game.alphabet(c)]
    matrix = np.zeros((game.d, len(variables)))
    for j, (c, s) in enumerate(variables):
        matrix[:, j] = game.feedback[c] == s
    return variables, matrix


def estimation_functions(game: PmGame, edges: List[Edge]) -> Tuple[Dict[Edge, WTable], Dict[Edge, float]]:
    """Minimum-norm w with sum_c w(c, Phi_cx) = L_ax - L_bx for every edge (a, b), a < b."""
    variables, matrix = _observation_system(game)
    tables, residuals = {}, {}
    for a, b in edges:
        rhs = game.loss[a] - game.loss[b]
        try:
            solution = least_norm_solve(matrix, rhs)
        except Inconsistent as e:
            raise NotGloballyObservable((a, b), e.residual)
        tables[(a, b)] = {var: float(value) for var, value in zip(variables, solution)}
        residuals[(a, b)] = float(np.max(np.abs(matrix @ solution - rhs)))
    return tables, residuals


def _edge_table(w: Dict[Edge, WTable], child: int, parent: int) -> WTable:
    """w for L_child - L_parent."""
    if (child, parent) in w:
        return w[(child, parent)]
    return {key: -value for key, value in w[(parent, child)].items()}


def build_estimator(game: PmGame, edges: List[Edge], w: Dict[Edge, WTable], root: int = 0):
    """BFS in-tree rooted at ``root`` and G(c, s)_b = sum of w along b's path to the root."""
    k = game.k
    parents = _bfs_parents(k, edges, root)
    if len(parents) < k:
        raise DisconnectedNeighborGraph(len(parents), k)
    in_tree = {child: parent for child, parent in parents.items() if parent is not None}

    keys = [(c, s) for c in range(k) for s in game.alphabet(c)]
    g_table = {key: np.zeros(k) for key in keys}
    for b in range(k):
        node = b
        while node != root:
            parent = in_tree[node]
            table = _edge_table(w, node, parent)
            for key in keys:
                g_table[key][b] += table[key]
            node = parent
    g_norm = max(float(np.abs(v).max()) for v in g_table.values())
    c_g = max(1.0, k * g_norm)
    return in_tree, g_table, c_g


def analyze_game(game: PmGame) -> PmStructure:
    pareto = validate_game(game)
    edges = neighbor_graph(game, pareto)
    w, residuals = estimation_functions(game, edges)
    in_tree, g_table, c_g = build_estimator(game, edges, w)
    logger.info("game %dx%d: %d neighbor pairs, c_G=%.4g", game.k, game.d, len(edges), c_g)
    return PmStructure(pareto=pareto, neighbor_edges=edges, w=w, root=0, in_tree=in_tree,
                       g_table=g_table, c_g=c_g, residuals=residuals)


def unbiasedness_residual(game: PmGame, structure: PmStructure) -> float:
    """max over pairs (a, b) and outcomes x of |sum_c (G(c, Phi_cx)_a - G(c, Phi_cx)_b) - (L_ax - L_bx)|."""
    k, d = game.k, game.d
    summed = np.zeros((d, k))
    for x in range(d):
        for c in range(k):
            summed[x] += structure.g_table[(c, int(game.feedback[c, x]))]
    worst = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            gap = (summed[:, a] - summed[:, b]) - (game.loss[a] - game.loss[b])
            worst = max(worst, float(np.abs(gap).max()))
    return worst


def pm_loss_estimate(g_table, chosen: int, symbol: int, p: ProbVector) -> np.ndarray:
    """G(chosen, symbol) / p_chosen."""
    if p[chosen] <= 0:
        raise DomainError(f"action {chosen + 1} was played with probability zero")
    try:
        row = g_table[(chosen, symbol)]
    except KeyError:
        raise DomainError(f"symbol {symbol} is not in the alphabet of action {chosen + 1}")
    return row / p[chosen]


def pm_zu(q: ProbVector, alpha: float, c_g: float) -> Tuple[float, float]:
    mass, gap = stability_mass(q, alpha)
    z = 4.0 * c_g ** 2 / (1.0 - alpha) * mass
    u = 8.0 * c_g / (1.0 - alpha) * gap ** (1.0 - alpha)
    return z, u


class PmProblem(Problem):
    """Globally observable partial monitoring with uniform forced exploration."""

    name = "pm"

    def __init__(self, game: PmGame, structure: Optional[PmStructure] = None, alpha: Optional[float] = None,
                 beta1: Optional[float] = None, beta_bar: Optional[float] = None):
        self.game = game
        self.structure = structure if structure is not None else analyze_game(game)
        self.k = game.k
        self.c_g = self.structure.c_g
        self.alpha = alpha if alpha is not None else default_alpha(self.k)
        self.beta1 = beta1 if beta1 is not None else 64.0 * self.c_g ** 2 / (1.0 - self.alpha)
        if beta_bar is None:
            beta_bar = 32.0 * self.c_g * math.sqrt(self.k) / ((1.0 - self.alpha) ** 2 * math.sqrt(self.beta1))
        self.beta_bar = beta_bar
        self.p0 = ProbVector.uniform(self.k)

    def zu(self, q: ProbVector):
        return pm_zu(q, self.alpha, self.c_g)

    def rate(self, z: float, u: float, beta: float) -> float:
        return exploration_rate(z, u, beta).gamma

    def observe(self, action: int, p: ProbVector, rate: float, draw, rng) -> RoundOutcome:
        symbol = int(self.game.feedback[action, int(draw)])
        return RoundOutcome(pm_loss_estimate(self.structure.g_table, action, symbol, p))

    def realized_loss(self, action: int, draw) -> float:
        return float(self.game.loss[action, int(draw)])

    def magnitude_bound(self, rate: float) -> float:
        return self.c_g / rate if rate > 0 else math.inf

    def describe(self) -> dict:
        info = super().describe()
        info["c_g"] = self.c_g
        return info
