import itertools

import numpy as np
import pytest

from conftest import tangent_game
from spblab.models.simple_schemas import PmGame, ProbVector
from spblab.problems.base import default_alpha
from spblab import settings
from spblab.problems.pm_games import (PmProblem, _cell_margin, analyze_game, build_estimator, estimation_functions,
                                      neighbor_graph, pm_loss_estimate, pm_zu, unbiasedness_residual,
                                      validate_game)
from spblab.utils.errors import DomainError, DuplicateAction, NonParetoAction, NotGloballyObservable

FULL_INFO_FEEDBACK = [[0, 1], [0, 1]]


def matching_pennies() -> PmGame:
    return PmGame([[1.0, 0.0], [0.0, 1.0]], FULL_INFO_FEEDBACK)


def bandit_game() -> PmGame:
    """Two arms with losses in {0,1}; outcome x enumerates (l_1, l_2) and the player sees its own loss."""
    outcomes = list(itertools.product([0, 1], repeat=2))
    loss = np.array([[o[a] for o in outcomes] for a in range(2)], dtype=float)
    return PmGame(loss, loss.astype(int))


def random_tangent_game(rng, k):
    s = np.sort(rng.choice(np.arange(1, 10), size=k, replace=False)) / 10.0
    feedback = rng.integers(0, 2, size=(k, 2))
    feedback[int(rng.integers(k))] = [0, 1]
    return tangent_game(s, feedback)


def brier_game(rng, k, d):
    """Halved squared distance to k interior points: cells are Voronoi regions, so every action is Pareto."""
    centers = rng.dirichlet(np.ones(d), size=k)
    loss = 0.5 * ((np.eye(d)[None, :, :] - centers[:, None, :]) ** 2).sum(axis=2)
    feedback = rng.integers(0, 3, size=(k, d))
    feedback[int(rng.integers(k))] = np.arange(d)
    return PmGame(loss, feedback)


def grid_margins(loss, resolution=200):
    """Per action, the best lead over every rival found on a grid of the outcome simplex."""
    i, j = np.meshgrid(np.arange(resolution + 1), np.arange(resolution + 1), indexing="ij")
    keep = i + j <= resolution
    grid = np.column_stack([i[keep], j[keep], resolution - i[keep] - j[keep]]) / resolution
    expected = grid @ loss.T
    margins = []
    for a in range(loss.shape[0]):
        rivals = np.delete(expected, a, axis=1).min(axis=1)
        margins.append(float((rivals - expected[:, a]).max()))
    return np.array(margins)


def test_symmetric_game_is_pareto():
    np.testing.assert_array_equal(validate_game(matching_pennies()), [True, True])


def test_pareto_margins_match_grid(rng):
    checked = 0
    for _ in range(40):
        loss = rng.random((4, 3))
        game = PmGame(loss, np.tile([0, 1, 2], (4, 1)))
        grid = grid_margins(loss)
        for a in range(4):
            margin = _cell_margin(game, a, [b for b in range(4) if b != a])
            if margin >= 0.03:
                # snapping to the grid moves u by at most 0.02 in l1, so leads shift by at most 0.02
                assert grid[a] > 0
            elif margin <= settings.MARGIN_TOL:
                assert grid[a] <= 1e-8
            else:
                continue
            checked += 1
    assert checked >= 80


def test_validate_game_agrees_with_grid(rng):
    for _ in range(20):
        loss = rng.random((4, 3))
        game = PmGame(loss, np.tile([0, 1, 2], (4, 1)))
        grid = grid_margins(loss)
        if np.all(grid > 0.03):
            assert validate_game(game).all()
        elif np.any(grid <= -0.03):
            with pytest.raises(NonParetoAction) as excinfo:
                validate_game(game)
            assert grid[excinfo.value.action] <= 1e-8


def test_dominated_action():
    with pytest.raises(NonParetoAction) as excinfo:
        validate_game(PmGame([[1.0, 1.0], [0.0, 0.0]], FULL_INFO_FEEDBACK))
    assert excinfo.value.action == 0
    assert "action 1" in str(excinfo.value)


def test_duplicate_rows():
    with pytest.raises(DuplicateAction):
        validate_game(PmGame([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 0], [0, 0], [0, 1]]))


def test_interior_action_with_tiny_cell_is_pareto():
    game = PmGame([[0.0, 1.0], [1.0, 0.0], [0.49, 0.49]], [[0, 0], [0, 0], [0, 1]])
    assert validate_game(game).all()


def test_interior_action_above_envelope_is_not_pareto():
    game = PmGame([[0.0, 1.0], [1.0, 0.0], [0.6, 0.6]], [[0, 0], [0, 0], [0, 1]])
    with pytest.raises(NonParetoAction) as excinfo:
        validate_game(game)
    assert excinfo.value.action == 2


def test_two_action_neighbors():
    game = matching_pennies()
    assert neighbor_graph(game, validate_game(game)) == [(0, 1)]


def test_sample_game_neighbors(pm_game):
    assert neighbor_graph(pm_game, validate_game(pm_game)) == [(0, 2), (1, 2)]


def test_two_outcome_games_have_path_neighbors(rng):
    for _ in range(20):
        k = int(rng.integers(2, 6))
        game = random_tangent_game(rng, k)
        edges = neighbor_graph(game, validate_game(game))
        assert len(edges) == k - 1
        # tangent points are sorted, so neighbours are consecutive actions
        assert edges == [(a, a + 1) for a in range(k - 1)]


def test_three_outcome_all_pairs_neighbors():
    loss = 1.0 - np.eye(3)
    game = PmGame(loss, np.tile([0, 1, 2], (3, 1)))
    assert neighbor_graph(game, validate_game(game)) == [(0, 1), (0, 2), (1, 2)]


def test_full_information_estimation():
    game = matching_pennies()
    w, residuals = estimation_functions(game, [(0, 1)])
    table = w[(0, 1)]
    for x in range(2):
        total = sum(table[(c, int(game.feedback[c, x]))] for c in range(2))
        assert total == pytest.approx(game.loss[0, x] - game.loss[1, x], abs=1e-10)
    assert residuals[(0, 1)] <= 1e-10


def test_bandit_game_is_globally_observable():
    game = bandit_game()
    edges = neighbor_graph(game, validate_game(game))
    _, residuals = estimation_functions(game, edges)
    assert max(residuals.values()) <= 1e-8


def test_constant_feedback_is_not_observable():
    game = PmGame([[1.0, 0.0], [0.0, 1.0]], [[0, 0], [0, 0]])
    with pytest.raises(NotGloballyObservable) as excinfo:
        estimation_functions(game, [(0, 1)])
    assert excinfo.value.edge == (0, 1)


def test_root_row_is_zero(pm_game):
    structure = analyze_game(pm_game)
    assert structure.root == 0
    for row in structure.g_table.values():
        assert row[0] == 0.0


def test_full_information_constant():
    game = matching_pennies()
    w, _ = estimation_functions(game, [(0, 1)])
    in_tree, g_table, c_g = build_estimator(game, [(0, 1)], w)
    assert in_tree == {1: 0}
    assert max(np.abs(v).max() for v in g_table.values()) <= 1.0
    assert 1.0 <= c_g <= 2.0


def test_sample_game_structure(pm_game):
    structure = analyze_game(pm_game)
    assert structure.in_tree == {2: 0, 1: 2}
    assert structure.c_g >= 1.0
    assert structure.c_g == pytest.approx(max(1.0, 3 * structure.g_norm()))
    assert unbiasedness_residual(pm_game, structure) <= 1e-8


def test_unbiasedness_on_random_games(rng):
    for _ in range(50):
        game = random_tangent_game(rng, int(rng.integers(2, 6)))
        assert unbiasedness_residual(game, analyze_game(game)) <= 1e-8


def test_unbiasedness_on_random_signal_games(rng):
    for _ in range(40):
        game = brier_game(rng, int(rng.integers(2, 6)), int(rng.integers(2, 5)))
        assert validate_game(game).all()
        assert unbiasedness_residual(game, analyze_game(game)) <= 1e-8


def test_unbiasedness_three_outcomes(rng):
    for _ in range(10):
        loss = 1.0 - np.eye(3) * rng.uniform(0.5, 1.0)
        feedback = np.array([[0, 1, 2], [0, 0, 1], [1, 0, 0]])
        game = PmGame(loss, feedback)
        assert unbiasedness_residual(game, analyze_game(game)) <= 1e-8


def test_loss_estimate_examples():
    p = ProbVector.uniform(2)
    table = {(0, 0): np.array([0.3, 0.0])}
    np.testing.assert_allclose(pm_loss_estimate(table, 0, 0, p), [0.6, 0.0])
    zero = {(0, 0): np.zeros(2)}
    np.testing.assert_array_equal(pm_loss_estimate(zero, 0, 0, p), [0.0, 0.0])
    with pytest.raises(DomainError):
        pm_loss_estimate(table, 0, 0, ProbVector([0.0, 1.0]))
    with pytest.raises(DomainError):
        pm_loss_estimate(table, 0, 5, p)


def test_loss_estimate_expectation(pm_game, rng):
    structure = analyze_game(pm_game)
    for _ in range(10):
        p = ProbVector(rng.dirichlet(np.ones(3)))
        for x in range(pm_game.d):
            expected = sum(p[c] * pm_loss_estimate(structure.g_table, c, int(pm_game.feedback[c, x]), p)
                           for c in range(3))
            for a in range(3):
                for b in range(3):
                    gap = pm_game.loss[a, x] - pm_game.loss[b, x]
                    assert expected[a] - expected[b] == pytest.approx(gap, abs=1e-8)


def test_pm_zu_examples():
    assert pm_zu(ProbVector.corner(3, 1), 0.5, 1.0) == (0.0, 0.0)
    z, u = pm_zu(ProbVector.uniform(2), 0.5, 1.0)
    assert z == pytest.approx(5.65685, abs=1e-4)
    assert u == pytest.approx(11.31371, abs=1e-4)
    z2, u2 = pm_zu(ProbVector.uniform(2), 0.5, 2.0)
    assert z2 == pytest.approx(4 * z)
    assert u2 == pytest.approx(2 * u)


def test_pm_zu_stays_below_maxima(rng):
    for _ in range(200):
        k = int(rng.integers(2, 8))
        alpha = float(rng.uniform(0.1, 0.9))
        c_g = float(rng.uniform(1.0, 5.0))
        q = rng.dirichlet(np.ones(k))
        z, u = pm_zu(ProbVector(q), alpha, c_g)
        assert z <= 4 * c_g ** 2 / (1 - alpha) * (1 + 1e-12)
        assert u <= 8 * c_g / (1 - alpha) + 1e-12
        assert z <= 8 * c_g ** 2 / (1 - alpha) * (1 - q.max()) ** (2 - alpha) + 1e-12


def test_problem_defaults(pm_game):
    problem = PmProblem(pm_game)
    alpha = default_alpha(3)
    assert problem.alpha == pytest.approx(alpha)
    assert problem.beta1 == pytest.approx(64 * problem.c_g ** 2 / (1 - alpha))
    np.testing.assert_allclose(problem.p0.weights, np.full(3, 1 / 3))
    assert problem.describe()["c_g"] == problem.c_g


def test_default_alpha():
    assert default_alpha(2) == 0.5
    assert default_alpha(10) == pytest.approx(1 - 1 / np.log(10))
    with pytest.raises(DomainError):
        default_alpha(1)
