from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Dict, List, Literal, Optional
from enum import Enum


class Regime(str, Enum):
    STOCHASTIC = "stochastic"
    ADVERSARIAL_SWITCHING = "adversarial_switching"
    CORRUPTED = "corrupted"


class ProblemKind(str, Enum):
    PM = "pm"
    GRAPH = "graph"
    PAID = "paid"


def _check_unit_interval(values: Optional[List[float]], name: str):
    if values is not None and any(not 0.0 <= v <= 1.0 for v in values):
        raise ValueError(f"{name} must lie in [0,1]")
    return values


def _check_distribution(values: Optional[List[float]]):
    if values is None:
        return values
    if any(v < 0 for v in values) or abs(sum(values) - 1.0) > 1e-9:
        raise ValueError("outcome_dist must be a probability vector")
    return values


class GameFile(BaseModel):
    loss: List[List[float]]
    feedback: List[List[int]]


class GraphFile(BaseModel):
    """Vertices are 1-based."""
    k: int = Field(ge=2)
    edges: List[List[int]]

    @field_validator("edges")
    @classmethod
    def check_pairs(cls, edges):
        for edge in edges:
            if len(edge) != 2:
                raise ValueError(f"edge {edge} is not a pair")
        return edges


class Phase(BaseModel):
    length: int = Field(gt=0)
    means: Optional[List[float]] = None
    outcome_dist: Optional[List[float]] = None

    @field_validator("means")
    @classmethod
    def check_means(cls, v):
        return _check_unit_interval(v, "means")

    @field_validator("outcome_dist")
    @classmethod
    def check_outcome_dist(cls, v):
        return _check_distribution(v)


class EnvSpec(BaseModel):
    regime: Regime = Regime.STOCHASTIC
    means: Optional[List[float]] = None
    outcome_dist: Optional[List[float]] = None
    phases: Optional[List[Phase]] = None
    corruption_budget: int = Field(default=0, ge=0)
    # 1-based; defaults to the runner-up arm
    decoy: Optional[int] = Field(default=None, ge=1)
    corruption_rule: Literal["flip_optimal"] = "flip_optimal"

    @field_validator("means")
    @classmethod
    def check_means(cls, v):
        return _check_unit_interval(v, "means")

    @field_validator("outcome_dist")
    @classmethod
    def check_outcome_dist(cls, v):
        return _check_distribution(v)

    @model_validator(mode="after")
    def check_regime_fields(self):
        if self.regime == Regime.ADVERSARIAL_SWITCHING:
            if not self.phases:
                raise ValueError("adversarial_switching needs at least one phase")
        elif self.means is None and self.outcome_dist is None:
            raise ValueError(f"{self.regime.value} needs means or outcome_dist")
        return self


class ExperimentConfig(BaseModel):
    problem: ProblemKind
    instance: Optional[str] = None
    game: Optional[GameFile] = None
    graph: Optional[GraphFile] = None
    arms: Optional[int] = Field(default=None, ge=2)
    cost: float = Field(default=1.0, ge=0)
    env: EnvSpec
    horizon: int = Field(ge=1)
    replicates: int = Field(default=1, ge=1)
    seed: int = 0
    alpha: Optional[float] = Field(default=None, gt=0, lt=1)
    beta1: Optional[float] = Field(default=None, gt=0)
    beta_bar: Optional[float] = Field(default=None, ge=0)
    output: Optional[str] = None

    @model_validator(mode="after")
    def check_instance_present(self):
        if self.problem == ProblemKind.PM and self.game is None and self.instance is None:
            raise ValueError("pm experiments need a game or an instance file")
        if self.problem == ProblemKind.GRAPH and self.graph is None and self.instance is None:
            raise ValueError("graph experiments need a graph or an instance file")
        if self.problem == ProblemKind.PAID and self.arms is None and self.env.means is None:
            raise ValueError("paid experiments need arms or env.means")
        return self


# Reports

class AnalyzeReport(BaseModel):
    k: int
    d: int
    pareto: List[bool]
    edges: List[List[int]]
    global_observability: bool
    c_g: Optional[float] = None
    root: Optional[int] = None
    in_tree: Dict[str, int] = {}
    residuals: Dict[str, float] = {}
    message: Optional[str] = None


class GraphReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    k: int
    obs_class: str = Field(alias="class")
    delta_star: Optional[float] = None
    x_star: Optional[List[float]] = None
    u_dist: Optional[List[float]] = None
    integer_domination: Optional[int] = None
    weak_domination: Optional[int] = None


class CheckSummary(BaseModel):
    passes: int
    total: int
    worst_slack: float

    @property
    def passed(self) -> bool:
        return self.passes == self.total


class RatioSummary(BaseModel):
    eps: str
    max_ratio: float
    mean_ratio: float


class LemmaReport(BaseModel):
    instances: int
    seed: int
    horizon: int
    lemma1_rule1: CheckSummary
    lemma1_rule2: CheckSummary
    lemma2: Dict[str, CheckSummary]
    beta_bounds: CheckSummary
    theorem3_rule1: List[RatioSummary]
    theorem3_rule2: List[RatioSummary]
    tsallis_upper: CheckSummary
    stability: CheckSummary
    entropy_growth: CheckSummary
    stress: CheckSummary
    all_passed: bool


class FitResult(BaseModel):
    slope: float
    intercept: float
    r_squared: float


class CheckpointStat(BaseModel):
    T: int
    mean_regret: float
    std_regret: float
    mean_cost: float = 0.0


class ViolationRecord(BaseModel):
    replicate: int
    round: int
    name: str
    detail: str


class ExperimentSummary(BaseModel):
    problem: ProblemKind
    regime: Regime
    horizon: int
    replicates: int
    seed: int
    alpha: float
    beta1: float
    beta_bar: float
    checkpoints: List[CheckpointStat]
    fit: Optional[FitResult] = None
    loss_fit: Optional[FitResult] = None
    cost_fit: Optional[FitResult] = None
    violations: List[ViolationRecord] = []
    runtime_seconds: float = 0.0


class FitReport(BaseModel):
    traces: str
    replicates: int
    checkpoints: List[CheckpointStat]
    fit: Optional[FitResult] = None
    cost_fit: Optional[FitResult] = None
