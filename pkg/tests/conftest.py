from __future__ import annotations

import json
from pathlib import Path

import pytest

from tim.task_model import TaskGraph, parse_task_definition

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def quesadilla_text() -> str:
    return (DATA / "quesadilla.json").read_text()


@pytest.fixture(scope="session")
def quesadilla_graph(quesadilla_text) -> TaskGraph:
    return parse_task_definition(quesadilla_text)


@pytest.fixture(scope="session")
def tourniquet_text() -> str:
    return (DATA / "tourniquet.json").read_text()


def linear_task_doc(n_steps: int, task_id: str = "linear") -> dict:
    """A minimal linear task: item passes through states stage-1..stage-n."""
    states = ["fresh"] + [f"stage-{i}" for i in range(1, n_steps)]
    return {
        "task_id": task_id,
        "name": f"Linear {n_steps}",
        "objects": [{"class": "item", "states": states}],
        "steps": [
            {"id": f"s{i}", "instruction": f"Perform stage {i} on the item",
             "required_objects": ["item"]}
            for i in range(1, n_steps + 1)
        ],
        "edges": [
            {"from": f"s{i}", "to": f"s{i + 1}",
             "goal": {"class": "item", "state": f"stage-{i}"}}
            for i in range(1, n_steps)
        ],
    }


@pytest.fixture
def linear4_graph() -> TaskGraph:
    return parse_task_definition(json.dumps(linear_task_doc(4)))
