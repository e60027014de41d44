import csv
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel

from spblab.models.schemas import ExperimentConfig, GameFile, GraphFile
from spblab.models.simple_schemas import FeedbackGraph, PmGame, RegretTrace
from spblab.utils.errors import DomainError

logger = logging.getLogger(__name__)

TRACE_HEADER = ["round", "action", "beta", "h", "gamma", "inst_regret", "cum_regret", "round_cost"]
SUMMARY_NAME = "summary.json"

Model = TypeVar("Model", bound=BaseModel)
PathLike = Union[str, Path]


def load_model(path: PathLike, model: Type[Model]) -> Model:
    """Parse a JSON file into ``model``; pydantic ValidationError propagates."""
    text = Path(path).read_text(encoding="utf-8")
    return model.model_validate_json(text)


def load_config(path: PathLike) -> ExperimentConfig:
    """Experiment config with its instance path resolved against the config's directory."""
    path = Path(path)
    config = load_model(path, ExperimentConfig)
    if config.instance is not None:
        instance = Path(config.instance)
        if not instance.is_absolute():
            instance = (path.parent / instance).resolve()
        config = config.model_copy(update={"instance": str(instance)})
    return config


def game_from_file(data: GameFile) -> PmGame:
    return PmGame(np.array(data.loss, dtype=float), np.array(data.feedback, dtype=int))


def graph_from_file(data: GraphFile) -> FeedbackGraph:
    """Converts 1-based vertex ids to 0-based."""
    edges = []
    for i, j in data.edges:
        if not (1 <= i <= data.k and 1 <= j <= data.k):
            raise DomainError(f"edge [{i},{j}] references a vertex outside 1..{data.k}")
        edges.append((i - 1, j - 1))
    return FeedbackGraph(data.k, frozenset(edges))


def load_game(path: PathLike) -> PmGame:
    return game_from_file(load_model(path, GameFile))


def load_graph(path: PathLike) -> FeedbackGraph:
    return graph_from_file(load_model(path, GraphFile))


def _fmt(value) -> str:
    return repr(float(value))


class TraceStore:
    """Directory of per-replicate CSV traces plus JSON reports."""

    def __init__(self, root: PathLike):
        self.root = Path(root)

    def trace_path(self, replicate: int) -> Path:
        return self.root / f"trace_r{replicate:03d}.csv"

    def write_trace(self, trace: RegretTrace) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.trace_path(trace.replicate)
        cum = trace.cum_regret
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TRACE_HEADER)
            for t in range(trace.horizon):
                writer.writerow([t + 1, int(trace.action[t]) + 1, _fmt(trace.beta[t]), _fmt(trace.h[t]),
                                 _fmt(trace.gamma[t]), _fmt(trace.inst_regret[t]), _fmt(cum[t]),
                                 _fmt(trace.round_cost[t])])
            for v in trace.violations:
                f.write(f"# violation round={v.round} name={v.name} detail={v.detail}\n")
        logger.debug("wrote %s", path)
        return path

    def read_trace(self, path: PathLike) -> Dict[str, np.ndarray]:
        """Columns of one trace file; footer comment lines are skipped."""
        with open(path, newline="", encoding="utf-8") as f:
            rows = [row for row in csv.reader(f) if row and not row[0].startswith("#")]
        if not rows or rows[0] != TRACE_HEADER:
            raise DomainError(f"{path} is not a trace file")
        body = np.array(rows[1:], dtype=float).reshape(-1, len(TRACE_HEADER))
        return {name: body[:, i] for i, name in enumerate(TRACE_HEADER)}

    def trace_files(self) -> List[Path]:
        return sorted(self.root.glob("trace_r*.csv"))

    def read_traces(self) -> List[Dict[str, np.ndarray]]:
        files = self.trace_files()
        if not files:
            raise DomainError(f"no trace files in {self.root}")
        return [self.read_trace(p) for p in files]

    def write_report(self, report: BaseModel, name: str = SUMMARY_NAME, path: Optional[PathLike] = None) -> Path:
        target = Path(path) if path is not None else self.root / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(dump_report(report) + "\n", encoding="utf-8")
        return target


def dump_report(report: BaseModel) -> str:
    return json.dumps(report.model_dump(mode="json", by_alias=True), indent=2)
