from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple
from dataclasses import dataclass, field

import numpy as np

from spblab import settings
from spblab.utils.errors import DomainError


def _as_vector(values, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise DomainError(f"{name} contains non-finite entries")
    return array


@dataclass(frozen=True)
class ProbVector:
    """A point of the (k-1)-simplex."""
    weights: np.ndarray

    def __post_init__(self):
        weights = _as_vector(self.weights, "weights").copy()
        if weights.size == 0:
            raise DomainError("probability vector is empty")
        if np.any(weights < 0):
            raise DomainError(f"probability vector has negative entry {weights.min():.3e}")
        if abs(weights.sum() - 1.0) > settings.SIMPLEX_TOL:
            raise DomainError(f"probability vector sums to {weights.sum():.12f}")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def k(self) -> int:
        return self.weights.size

    @classmethod
    def uniform(cls, k: int) -> "ProbVector":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def corner(cls, k: int, i: int) -> "ProbVector":
        weights = np.zeros(k)
        weights[i] = 1.0
        return cls(weights)

    def __len__(self):
        return self.k

    def __getitem__(self, i):
        return self.weights[i]


@dataclass(frozen=True)
class HybridRegularizer:
    """beta * (-H_alpha) + beta_bar * (-H_{1-alpha})."""
    alpha: float
    beta: float
    beta_bar: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0,1), got {self.alpha}")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not (np.isfinite(self.beta_bar) and self.beta_bar >= 0):
            raise DomainError(f"beta_bar must be non-negative, got {self.beta_bar}")

    @property
    def alpha_bar(self) -> float:
        return 1.0 - self.alpha


@dataclass
class SpbState:
    """Learning-rate state of one agent."""
    alpha: float
    beta1: float
    beta_bar: float
    beta: float = 0.0
    last_h: float = 0.0
    round: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0,1), got {self.alpha}")
        if not self.beta1 > 0:
            raise DomainError(f"beta1 must be positive, got {self.beta1}")
        if self.beta_bar < 0:
            raise DomainError(f"beta_bar must be non-negative, got {self.beta_bar}")
        if self.beta <= 0:
            self.beta = self.beta1

    def observe_entropy(self, h: float):
        # Algorithm line 8: h_hat_{t+1} = h_t
        if not (np.isfinite(h) and h > 0):
            raise DomainError(f"penalty component must be positive, got {h}")
        self.last_h = float(h)

    def regularizer(self) -> HybridRegularizer:
        return HybridRegularizer(self.alpha, self.beta, self.beta_bar)


@dataclass(frozen=True)
class SpbSequences:
    z: np.ndarray
    u: np.ndarray
    h: np.ndarray
    beta_seq: np.ndarray

    def __post_init__(self):
        arrays = {name: _as_vector(getattr(self, name), name) for name in ("z", "u", "h", "beta_seq")}
        lengths = {a.size for a in arrays.values()}
        if len(lengths) != 1:
            raise DomainError(f"sequences have unequal lengths {sorted(lengths)}")
        if np.any(arrays["z"] < 0) or np.any(arrays["u"] < 0):
            raise DomainError("z and u must be non-negative")
        if np.any(arrays["h"] <= 0):
            raise DomainError("h must be positive")
        for name, array in arrays.items():
            object.__setattr__(self, name, array)

    @property
    def T(self) -> int:
        return self.z.size


@dataclass(frozen=True)
class PmGame:
    """Loss matrix and feedback matrix of a partial monitoring game."""
    loss: np.ndarray
    feedback: np.ndarray

    def __post_init__(self):
        loss = np.asarray(self.loss, dtype=float)
        feedback = np.asarray(self.feedback, dtype=int)
        if loss.ndim != 2 or loss.shape != feedback.shape:
            raise DomainError(f"loss {loss.shape} and feedback {feedback.shape} must be equal 2-D shapes")
        k, d = loss.shape
        if k < 2 or d < 2:
            raise DomainError(f"need k >= 2 actions and d >= 2 outcomes, got {k}x{d}")
        if not np.all(np.isfinite(loss)) or loss.min() < 0 or loss.max() > 1:
            raise DomainError("losses must lie in [0,1]")
        if feedback.min() < 0:
            raise DomainError("feedback symbols must be non-negative integers")
        object.__setattr__(self, "loss", loss)
        object.__setattr__(self, "feedback", feedback)

    @property
    def k(self) -> int:
        return self.loss.shape[0]

    @property
    def d(self) -> int:
        return self.loss.shape[1]

    def alphabet(self, c: int) -> List[int]:
        return sorted(set(int(s) for s in self.feedback[c]))


Edge = Tuple[int, int]


@dataclass(frozen=True)
class PmStructure:
    pareto: np.ndarray
    neighbor_edges: List[Edge]
    w: Dict[Edge, Dict[Tuple[int, int], float]]
    root: int
    in_tree: Dict[int, int]
    g_table: Dict[Tuple[int, int], np.ndarray]
    c_g: float
    residuals: Dict[Edge, float] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.pareto.size

    def g_norm(self) -> float:
        return max(float(np.abs(v).max()) for v in self.g_table.values())


class ObservabilityClass(str, Enum):
    NON_OBSERVABLE = "non-observable"
    STRONG = "strong"
    WEAK = "weak"


@dataclass(frozen=True)
class FeedbackGraph:
    """Directed feedback graph on 0..k-1; edge (i, j) means playing i reveals loss j."""
    k: int
    edges: FrozenSet[Edge]
    obs_class: Optional[ObservabilityClass] = None
    delta_star: Optional[float] = None
    x_star: Optional[np.ndarray] = None
    u_dist: Optional[ProbVector] = None
    in_neighbors: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False)
    out_neighbors: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.k < 2:
            raise DomainError(f"graph needs k >= 2 vertices, got {self.k}")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < self.k and 0 <= j < self.k):
                raise DomainError(f"edge ({i + 1},{j + 1}) references a vertex outside 1..{self.k}")
        object.__setattr__(self, "edges", edges)
        in_nb = tuple(tuple(sorted(i for i, jj in edges if jj == j)) for j in range(self.k))
        out_nb = tuple(tuple(sorted(j for ii, j in edges if ii == i)) for i in range(self.k))
        object.__setattr__(self, "in_neighbors", in_nb)
        object.__setattr__(self, "out_neighbors", out_nb)

    def adjacency(self) -> np.ndarray:
        """A[i, j] = 1 when i observes j."""
        matrix = np.zeros((self.k, self.k))
        for i, j in self.edges:
            matrix[i, j] = 1.0
        return matrix


@dataclass(frozen=True)
class PaidConfig:
    k: int
    cost: float
    alpha: float
    beta1: float
    beta_bar: float

    def __post_init__(self):
        if self.k < 2:
            raise DomainError(f"need at least two arms, got {self.k}")
        if not (np.isfinite(self.cost) and self.cost >= 0):
            raise DomainError(f"observation cost must be non-negative, got {self.cost}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0,1), got {self.alpha}")
        if self.beta1 <= 0 or self.beta_bar < 0:
            raise DomainError("beta1 must be positive and beta_bar non-negative")


@dataclass(frozen=True)
class Violation:
    round: int
    name: str
    detail: str


@dataclass
class RegretTrace:
    """Per-round record of one replicate."""
    replicate: int
    seed: int
    action: np.ndarray
    loss: np.ndarray
    comparator: np.ndarray
    beta: np.ndarray
    h: np.ndarray
    gamma: np.ndarray
    round_cost: np.ndarray
    inst_regret: np.ndarray
    violations: List[Violation] = field(default_factory=list)

    @classmethod
    def empty(cls, horizon: int, replicate: int = 0, seed: int = 0) -> "RegretTrace":
        return cls(
            replicate=replicate,
            seed=seed,
            action=np.zeros(horizon, dtype=int),
            loss=np.zeros(horizon),
            comparator=np.zeros(horizon),
            beta=np.zeros(horizon),
            h=np.zeros(horizon),
            gamma=np.zeros(horizon),
            round_cost=np.zeros(horizon),
            inst_regret=np.zeros(horizon),
        )

    @property
    def horizon(self) -> int:
        return self.action.size

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.inst_regret)

    @property
    def cum_cost(self) -> np.ndarray:
        return np.cumsum(self.round_cost)

    @property
    def total_regret(self) -> float:
        return float(self.inst_regret.sum())

    def checkpoints(self) -> Dict[int, float]:
        """Cumulative regret at every power of two not exceeding the horizon."""
        cum = self.cum_regret
        points = {}
        t = 1
        while t <= self.horizon:
            points[t] = float(cum[t - 1])
            t *= 2
        return points
