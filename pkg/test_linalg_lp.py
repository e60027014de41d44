import numpy as np
import pytest
from scipy.optimize import linprog

from spblab.utils.errors import DomainError, Inconsistent, Infeasible, Unbounded
from spblab.utils.linalg_lp import DenseMatrix, least_norm_solve, lp_solve


def test_dense_matrix_round_trip():
    matrix = DenseMatrix.from_array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    assert (matrix.rows, matrix.cols) == (2, 3)
    np.testing.assert_array_equal(matrix.to_array()[1], [4.0, 5.0, 6.0])


def test_dense_matrix_checks_storage():
    with pytest.raises(DomainError):
        DenseMatrix(2, 2, (1.0, 2.0, 3.0))
    with pytest.raises(DomainError):
        DenseMatrix(1, 2, (1.0, float("nan")))


def test_least_norm_identity():
    b = np.array([0.3, -2.0, 5.0])
    np.testing.assert_allclose(least_norm_solve(np.eye(3), b), b)


def test_least_norm_symmetric_row():
    np.testing.assert_allclose(least_norm_solve(DenseMatrix.from_array([[1.0, 1.0]]), [2.0]), [1.0, 1.0])


def test_least_norm_inconsistent():
    with pytest.raises(Inconsistent) as excinfo:
        least_norm_solve([[1.0, 0.0], [1.0, 0.0]], [0.0, 1.0])
    assert excinfo.value.residual > 0.1


def test_least_norm_orthogonal_to_null_space(rng):
    for _ in range(30):
        m, n = 3, 6
        A = rng.normal(size=(m, n))
        x_true = rng.normal(size=n)
        x = least_norm_solve(A, A @ x_true)
        null = np.linalg.svd(A)[2][m:]
        assert np.max(np.abs(A @ x - A @ x_true)) <= 1e-8
        assert np.max(np.abs(null @ x)) <= 1e-8


def test_lp_bound_meets_constraint():
    solution = lp_solve([1.0], [([[1.0]], [1.0], ">=")], [(0.0, 1.0)])
    assert solution.value == pytest.approx(1.0)
    assert solution.x[0] == pytest.approx(1.0)


def test_lp_triangle_domination():
    # N_in = {1,2}, {2,3}, {1,3}
    cover = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]])
    solution = lp_solve(np.ones(3), [(cover, np.ones(3), ">=")], [(0.0, 1.0)] * 3)
    assert solution.value == pytest.approx(1.5, abs=1e-9)
    np.testing.assert_allclose(solution.x, [0.5, 0.5, 0.5], atol=1e-9)


def test_lp_infeasible():
    with pytest.raises(Infeasible):
        lp_solve([0.0], [([[1.0]], [2.0], ">="), ([[1.0]], [1.0], "<=")])


def test_lp_unbounded():
    with pytest.raises(Unbounded):
        lp_solve([-1.0, 0.0], [([[1.0, -1.0]], [1.0], "<=")])


def test_lp_free_variables_and_equalities():
    # min x + y s.t. x - y = 1, x >= -3, y free and y >= -2 through a row
    solution = lp_solve([1.0, 1.0], [([[1.0, -1.0]], [1.0], "="), ([[0.0, 1.0]], [-2.0], ">=")],
                        [(-3.0, None), (None, None)])
    assert solution.value == pytest.approx(-3.0)
    np.testing.assert_allclose(solution.x, [-1.0, -2.0], atol=1e-9)


def test_lp_maximize():
    solution = lp_solve([1.0, 2.0], [([[1.0, 1.0]], [4.0], "<=")], [(0.0, 3.0), (0.0, 3.0)], maximize=True)
    assert solution.value == pytest.approx(7.0)


def test_lp_rejects_unknown_sense():
    with pytest.raises(DomainError):
        lp_solve([1.0], [([[1.0]], [1.0], "<")])


def test_lp_matches_scipy(rng):
    for _ in range(40):
        n, m = int(rng.integers(2, 8)), int(rng.integers(1, 6))
        c = rng.normal(size=n)
        A = rng.uniform(0.0, 1.0, (m, n))
        b = rng.uniform(0.5, 3.0, m)
        ours = lp_solve(c, [(A, b, "<=")], [(0.0, 1.0)] * n)
        reference = linprog(c, A_ub=A, b_ub=b, bounds=[(0.0, 1.0)] * n, method="highs")
        assert ours.value == pytest.approx(reference.fun, abs=1e-8)
        assert np.all(A @ ours.x <= b + 1e-9)


def test_lp_weak_duality_against_feasible_points(rng):
    for _ in range(40):
        n = int(rng.integers(2, 6))
        cover = (rng.random((n, n)) < 0.5).astype(float)
        np.fill_diagonal(cover, 1.0)
        solution = lp_solve(np.ones(n), [(cover, np.ones(n), ">=")], [(0.0, 1.0)] * n)
        feasible = np.ones(n)
        assert solution.value <= feasible.sum() + 1e-9
        assert np.all(cover @ solution.x >= 1.0 - 1e-9)
