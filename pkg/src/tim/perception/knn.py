"""Nearest-neighbour object-state classification over cosine distance."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ObjectStateExample:
    embedding: np.ndarray
    object_class: str
    state: str

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=np.float64)
        object.__setattr__(self, "embedding", emb)
        if emb.ndim != 1:
            raise ValueError(f"embedding must be 1-D, got shape {emb.shape}")
        if not np.all(np.isfinite(emb)):
            raise ValueError("embedding must be finite")


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine distance undefined for zero-norm vector")
    return 1.0 - float(np.dot(a, b) / (na * nb))


def knn_classify(examples: list[ObjectStateExample], query, k: int) -> tuple[str, float]:
    """Majority state vote over the k nearest examples by cosine distance.

    Score is the winning vote fraction. Vote ties go to the label with the
    smaller mean distance among its selected neighbours, then to the
    lexicographically smaller label. Neighbour selection ties at the k-th
    distance are broken by corpus order.
    """
    if not examples:
        raise ValueError("example corpus is empty")
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive int, got {k!r}")
    if k > len(examples):
        raise ValueError(f"k={k} exceeds corpus size {len(examples)}")
    q = np.asarray(query, dtype=np.float64)
    dists = [cosine_distance(ex.embedding, q) for ex in examples]
    order = sorted(range(len(examples)), key=lambda i: (dists[i], i))[:k]

    votes: dict[str, int] = {}
    dist_sum: dict[str, float] = {}
    for i in order:
        label = examples[i].state
        votes[label] = votes.get(label, 0) + 1
        dist_sum[label] = dist_sum.get(label, 0.0) + dists[i]
    best = min(votes, key=lambda lbl: (-votes[lbl], dist_sum[lbl] / votes[lbl], lbl))
    return best, votes[best] / k


def classify_object_state(examples: list[ObjectStateExample], query, k: int,
                          object_class: str) -> tuple[str, float]:
    """knn_classify restricted to one object class's examples."""
    subset = [ex for ex in examples if ex.object_class == object_class]
    if not subset:
        raise ValueError(f"no examples for object class {object_class!r}")
    return knn_classify(subset, query, min(k, len(subset)))


def save_examples(examples: list[ObjectStateExample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps({"embedding": ex.embedding.tolist(),
                                 "class": ex.object_class, "state": ex.state}) + "\n")


def load_examples(path) -> list[ObjectStateExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(ObjectStateExample(np.asarray(rec["embedding"]),
                                          rec["class"], rec["state"]))
    return out
