"""Classification metrics for evaluating step estimators."""

from __future__ import annotations

import math


def eval_metrics(y_true: list[str], y_pred: list[str]) -> dict:
    """Accuracy plus per-class precision/recall/F1 and macro averages.

    Classes are the union of both label lists, sorted. A class absent from
    the denominator of a ratio scores 0.0 for it. The support-weighted
    recall equals accuracy by construction and is reported for convenience.
    """
    if len(y_true) != len(y_pred) or not y_true:
        raise ValueError("y_true and y_pred must be equal-length and non-empty")
    classes = sorted(set(y_true) | set(y_pred))
    per_class = {}
    for cls in classes:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p != cls)
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {"precision": precision, "recall": recall,
                          "f1": f1, "support": support}
    n = len(y_true)
    accuracy = sum(1 for t, p in zip(y_true, y_pred) if t == p) / n
    macro = {
        key: sum(v[key] for v in per_class.values()) / len(classes)
        for key in ("precision", "recall", "f1")
    }
    weighted_recall = sum(v["recall"] * v["support"] for v in per_class.values()) / n
    return {"accuracy": accuracy, "classes": per_class, "macro": macro,
            "weighted_recall": weighted_recall}


def format_mean_std(values: list[float]) -> str:
    """Render as mean±std with two decimals; std uses the N divisor."""
    if not values:
        raise ValueError("values must be non-empty")
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return f"{mean:.2f}±{math.sqrt(var):.2f}"
