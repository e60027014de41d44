import json
from pathlib import Path

import numpy as np
import pytest

from spblab.database.trace_store import load_game, load_graph
from spblab.models.simple_schemas import FeedbackGraph, PmGame

CONFIGS = Path(__file__).resolve().parent / "configs"


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS


@pytest.fixture
def pm_game() -> PmGame:
    """Three actions, two outcomes; only the third action separates the outcomes."""
    return load_game(CONFIGS / "pm_game_k3.json")


@pytest.fixture
def cycle_graph() -> FeedbackGraph:
    return load_graph(CONFIGS / "graph_3cycle.json")


@pytest.fixture
def triangle_graph() -> FeedbackGraph:
    return load_graph(CONFIGS / "graph_triangle.json")


@pytest.fixture
def write_json(tmp_path):
    def write(name: str, payload) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path
    return write


def tangent_game(s: np.ndarray, feedback: np.ndarray) -> PmGame:
    """Two-outcome game whose action a is the tangent of s(1-s) at s[a]; every action is Pareto optimal."""
    s = np.asarray(s, dtype=float)
    loss = np.column_stack([s ** 2, (1.0 - s) ** 2])
    return PmGame(loss, np.asarray(feedback, dtype=int))
