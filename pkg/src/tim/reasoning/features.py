"""Fixed-width numeric encoding of the observable session state.

The vector has two blocks. First, one indicator per (class, state) pair in
the task's object vocabulary, sorted lexicographically, set to 1.0 once
that pair has been observed. Second, five hand-interaction slots per object
class (classes sorted): which hand touched it last (left, right, both) and
at what level (direct, indirect), from the most recent interaction event
for that class.
"""

from __future__ import annotations

import numpy as np

from ..stream_bus import HAND_TAGS, INTERACTION_LEVELS
from ..task_model import TaskGraph

# "none" is a valid event value but carries no information, so it gets no slot.
_HANDS = tuple(h for h in HAND_TAGS if h != "none")
_LEVELS = tuple(lv for lv in INTERACTION_LEVELS if lv != "none")
_HOI_SLOTS = tuple(f"hand_{h}" for h in _HANDS) + tuple(f"level_{lv}" for lv in _LEVELS)


def _sorted_pairs(task: TaskGraph) -> list[tuple[str, str]]:
    return sorted((g.object_class, g.state) for g in task.vocabulary_pairs())


def _sorted_classes(task: TaskGraph) -> list[str]:
    return sorted(ov.object_class for ov in task.objects)


def feature_names(task: TaskGraph) -> list[str]:
    names = [f"state:{cls}={st}" for cls, st in _sorted_pairs(task)]
    for cls in _sorted_classes(task):
        names.extend(f"hoi:{cls}:{slot}" for slot in _HOI_SLOTS)
    return names


def feature_width(task: TaskGraph) -> int:
    return len(task.vocabulary_pairs()) + len(_HOI_SLOTS) * len(task.objects)


def encode_observations(task: TaskGraph, observed: set[tuple[str, str]],
                        last_interaction: dict[str, tuple[str, str]]) -> np.ndarray:
    """Encode observed (class, state) pairs plus per-class hand contacts.

    `last_interaction` maps object class to (hand, level) of its latest
    interaction event. Anything outside the task vocabulary is an error.
    """
    pairs = _sorted_pairs(task)
    pair_pos = {p: i for i, p in enumerate(pairs)}
    classes = _sorted_classes(task)
    class_pos = {c: i for i, c in enumerate(classes)}

    vec = np.zeros(len(pairs) + len(_HOI_SLOTS) * len(classes))
    for pair in observed:
        if pair not in pair_pos:
            raise ValueError(f"{pair} is not in the task object vocabulary")
        vec[pair_pos[pair]] = 1.0
    base = len(pairs)
    for cls, (hand, level) in last_interaction.items():
        if cls not in class_pos:
            raise ValueError(f"object class {cls!r} is not in the task vocabulary")
        if hand not in HAND_TAGS:
            raise ValueError(f"unknown hand tag {hand!r}")
        if level not in INTERACTION_LEVELS:
            raise ValueError(f"unknown interaction level {level!r}")
        offset = base + len(_HOI_SLOTS) * class_pos[cls]
        if hand != "none":
            vec[offset + _HANDS.index(hand)] = 1.0
        if level != "none":
            vec[offset + len(_HANDS) + _LEVELS.index(level)] = 1.0
    return vec
