"""
Small dense linear algebra: least-norm solves and a two-phase tableau
simplex with Bland's rule.

Instances are tiny (tens of variables) so everything is dense numpy.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from spblab import settings
from spblab.utils.errors import DomainError, Inconsistent, Infeasible, NumericError, Unbounded

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
COST_TOL = 1e-11


@dataclass(frozen=True)
class DenseMatrix:
    """Row-major dense matrix."""
    rows: int
    cols: int
    data: Tuple[float, ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0 or self.rows * self.cols != len(self.data):
            raise DomainError(f"storage of length {len(self.data)} does not fit {self.rows}x{self.cols}")
        if not all(np.isfinite(self.data)):
            raise DomainError("matrix has non-finite entries")

    @classmethod
    def from_array(cls, array) -> "DenseMatrix":
        array = np.atleast_2d(np.asarray(array, dtype=float))
        return cls(array.shape[0], array.shape[1], tuple(float(v) for v in array.ravel()))

    def to_array(self) -> np.ndarray:
        return np.array(self.data, dtype=float).reshape(self.rows, self.cols)


MatrixLike = Union[DenseMatrix, np.ndarray, Sequence[Sequence[float]]]


def _as_array(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, DenseMatrix):
        return matrix.to_array()
    array = np.atleast_2d(np.asarray(matrix, dtype=float))
    if not np.all(np.isfinite(array)):
        raise DomainError("matrix has non-finite entries")
    return array


def least_norm_solve(A: MatrixLike, b) -> np.ndarray:
    """Minimum Euclidean norm solution of A x = b.

    Raises Inconsistent when the best least-squares fit leaves a residual
    above tolerance.
    """
    matrix = _as_array(A)
    rhs = np.asarray(b, dtype=float).ravel()
    if matrix.shape[0] != rhs.size:
        raise DomainError(f"matrix has {matrix.shape[0]} rows but rhs has {rhs.size} entries")
    x, *_ = np.linalg.lstsq(matrix, rhs, rcond=None)
    residual = float(np.max(np.abs(matrix @ x - rhs))) if rhs.size else 0.0
    if residual > settings.LSQ_TOL * max(1.0, float(np.max(np.abs(rhs), initial=0.0))):
        raise Inconsistent(residual)
    return x


# Linear programming

Constraint = Tuple[MatrixLike, Sequence[float], str]
Bound = Tuple[Optional[float], Optional[float]]

SENSES = ("<=", ">=", "=")


class LpSolution(NamedTuple):
    value: float
    x: np.ndarray


def _pivot(tableau: np.ndarray, row: int, col: int):
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and tableau[r, col] != 0.0:
            tableau[r] -= tableau[r, col] * tableau[row]


def _run_simplex(tableau: np.ndarray, basis: List[int], allowed: int) -> int:
    """Bland's rule on a tableau whose last row holds reduced costs and whose last column is the rhs."""
    m = len(basis)
    limit = 50 * (tableau.shape[1] + m) + 100
    for iteration in range(limit):
        costs = tableau[-1, :allowed]
        candidates = np.flatnonzero(costs < -COST_TOL)
        if candidates.size == 0:
            return iteration
        entering = int(candidates[0])
        column = tableau[:m, entering]
        best_row, best_ratio = -1, np.inf
        for r in range(m):
            if column[r] > PIVOT_TOL:
                ratio = tableau[r, -1] / column[r]
                if ratio < best_ratio - 1e-14 or (abs(ratio - best_ratio) <= 1e-14 and basis[r] < basis[best_row]):
                    best_row, best_ratio = r, ratio
        if best_row < 0:
            raise Unbounded("objective is unbounded below on the feasible region")
        _pivot(tableau, best_row, entering)
        basis[best_row] = entering
    raise NumericError("simplex exceeded its iteration cap", float(np.min(tableau[-1, :allowed])))


def _standard_form(n: int, bounds: Optional[Sequence[Bound]]):
    """Map x = offset + M y with y >= 0, plus upper-bound rows on y."""
    if bounds is None:
        bounds = [(0.0, None)] * n
    if len(bounds) != n:
        raise DomainError(f"expected {n} bounds, got {len(bounds)}")
    columns, offset, upper_rows = [], np.zeros(n), []
    for i, (lo, hi) in enumerate(bounds):
        if lo is not None and hi is not None and lo > hi:
            raise Infeasible(f"variable {i + 1} has empty bounds [{lo}, {hi}]")
        unit = np.zeros(n)
        unit[i] = 1.0
        if lo is not None:
            offset[i] = lo
            columns.append(unit)
            if hi is not None:
                upper_rows.append((len(columns) - 1, hi - lo))
        elif hi is not None:
            offset[i] = hi
            columns.append(-unit)
        else:
            columns.append(unit)
            columns.append(-unit)
    return offset, np.column_stack(columns), upper_rows


def lp_solve(objective, constraints: Sequence[Constraint], bounds: Optional[Sequence[Bound]] = None,
             maximize: bool = False) -> LpSolution:
    """Solve min (or max) c.x subject to row blocks A x (<=|>=|=) b and per-variable bounds.

    Bounds default to x >= 0; a bound of None is infinite. Returns a basic
    optimal solution.
    """
    c = np.asarray(objective, dtype=float).ravel()
    n = c.size
    if not np.all(np.isfinite(c)):
        raise DomainError("objective has non-finite entries")
    sign = -1.0 if maximize else 1.0

    offset, M, upper_rows = _standard_form(n, bounds)
    rows, rhs, senses = [], [], []
    for A, b, sense in constraints:
        if sense not in SENSES:
            raise DomainError(f"unknown constraint sense {sense!r}")
        block = _as_array(A)
        values = np.asarray(b, dtype=float).ravel()
        if block.shape != (values.size, n):
            raise DomainError(f"constraint block {block.shape} does not match {values.size} rows x {n} variables")
        for row, value in zip(block, values):
            rows.append(row @ M)
            rhs.append(value - row @ offset)
            senses.append(sense)
    ny = M.shape[1]
    for col, cap in upper_rows:
        row = np.zeros(ny)
        row[col] = 1.0
        rows.append(row)
        rhs.append(cap)
        senses.append("<=")

    m = len(rows)
    n_slack = sum(s != "=" for s in senses)
    width = ny + n_slack
    A_std = np.zeros((m, width))
    b_std = np.array(rhs, dtype=float)
    slack = ny
    for r, sense in enumerate(senses):
        A_std[r, :ny] = rows[r]
        if sense == "<=":
            A_std[r, slack] = 1.0
            slack += 1
        elif sense == ">=":
            A_std[r, slack] = -1.0
            slack += 1
    negative = b_std < 0
    A_std[negative] *= -1.0
    b_std[negative] *= -1.0
    cost = np.concatenate([sign * (M.T @ c), np.zeros(n_slack)])

    # phase one: an artificial per row
    tableau = np.zeros((m + 1, width + m + 1))
    tableau[:m, :width] = A_std
    tableau[:m, width:width + m] = np.eye(m)
    tableau[:m, -1] = b_std
    tableau[-1, :width] = -A_std.sum(axis=0)
    tableau[-1, -1] = -b_std.sum()
    basis = list(range(width, width + m))
    iterations = _run_simplex(tableau, basis, width + m)
    infeasibility = -tableau[-1, -1]
    if infeasibility > settings.LP_TOL * max(1.0, float(b_std.sum())):
        raise Infeasible(f"constraints are infeasible (phase-one value {infeasibility:.3e})")

    # drive remaining artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= width:
            nonzero = np.flatnonzero(np.abs(tableau[r, :width]) > 1e-9)
            if nonzero.size == 0:
                continue
            _pivot(tableau, r, int(nonzero[0]))
            basis[r] = int(nonzero[0])
        keep.append(r)
    body = tableau[keep][:, list(range(width)) + [tableau.shape[1] - 1]]
    basis = [basis[r] for r in keep]

    phase2 = np.zeros((len(keep) + 1, width + 1))
    phase2[:-1] = body
    phase2[-1, :width] = cost
    for r, j in enumerate(basis):
        phase2[-1] -= cost[j] * phase2[r]
    iterations += _run_simplex(phase2, basis, width)

    y_full = np.zeros(width)
    for r, j in enumerate(basis):
        y_full[j] = phase2[r, -1]
    x = offset + M @ y_full[:ny]
    _check_feasible(x, constraints, bounds)
    value = float(c @ x)
    logger.debug("lp_solve n=%d m=%d iterations=%d value=%.6g", n, m, iterations, value)
    return LpSolution(value, x)


def _check_feasible(x: np.ndarray, constraints: Sequence[Constraint], bounds: Optional[Sequence[Bound]]):
    worst = 0.0
    for A, b, sense in constraints:
        gap = _as_array(A) @ x - np.asarray(b, dtype=float).ravel()
        if sense == "<=":
            worst = max(worst, float(np.max(gap, initial=0.0)))
        elif sense == ">=":
            worst = max(worst, float(np.max(-gap, initial=0.0)))
        else:
            worst = max(worst, float(np.max(np.abs(gap), initial=0.0)))
    for i, (lo, hi) in enumerate(bounds or [(0.0, None)] * x.size):
        if lo is not None:
            worst = max(worst, lo - x[i])
        if hi is not None:
            worst = max(worst, x[i] - hi)
    if worst > settings.LP_TOL * max(1.0, float(np.max(np.abs(x), initial=0.0))):
        raise NumericError("simplex solution fails the feasibility re-check", worst)
