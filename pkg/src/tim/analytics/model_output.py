"""Confidence-over-time views of the step estimates a session produced."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ConfidenceMatrix:
    """Per-step mean confidence in fixed time bins.

    Bins tile the estimate timeline starting at the first output timestamp;
    an estimate at the last timestamp falls in the final bin. `cells[i][j]`
    is the mean confidence of step `step_ids[i]` in bin j, or None when the
    step produced no estimate there.
    """

    step_ids: tuple[str, ...]
    first_ts_ns: int
    bin_width_s: float
    n_bins: int
    cells: tuple[tuple[float | None, ...], ...]

    def to_dict(self) -> dict:
        return {"step_ids": list(self.step_ids), "first_ts_ns": self.first_ts_ns,
                "bin_width_s": self.bin_width_s, "n_bins": self.n_bins,
                "cells": [list(row) for row in self.cells]}


def confidence_matrix(estimates: list[tuple[int, str, float]], bin_width_s: float,
                      step_ids: list[str] | None = None) -> ConfidenceMatrix:
    """Bin (ts_ns, step_id, confidence) triples.

    Step rows default to order of first appearance. Bin count is
    floor((last - first) / width) + 1 over the estimate timestamps.
    """
    if bin_width_s <= 0:
        raise ValueError("bin_width_s must be positive")
    if not estimates:
        return ConfidenceMatrix(tuple(step_ids or ()), 0, bin_width_s, 0,
                                tuple(() for _ in (step_ids or ())))
    first = min(ts for ts, _, _ in estimates)
    last = max(ts for ts, _, _ in estimates)
    width_ns = bin_width_s * 1e9
    n_bins = int(math.floor((last - first) / width_ns)) + 1

    if step_ids is None:
        seen: list[str] = []
        for _, sid, _ in estimates:
            if sid not in seen:
                seen.append(sid)
        step_ids = seen
    row_of = {sid: i for i, sid in enumerate(step_ids)}

    sums = [[0.0] * n_bins for _ in step_ids]
    counts = [[0] * n_bins for _ in step_ids]
    for ts, sid, conf in estimates:
        if sid not in row_of:
            continue
        b = int(math.floor((ts - first) / width_ns))
        sums[row_of[sid]][b] += conf
        counts[row_of[sid]][b] += 1
    cells = tuple(
        tuple(s / c if c else None for s, c in zip(srow, crow))
        for srow, crow in zip(sums, counts)
    )
    return ConfidenceMatrix(tuple(step_ids), first, bin_width_s, n_bins, cells)


def global_summaries(matrix: ConfidenceMatrix, threshold: float = 0.5) -> dict:
    """Per step: mean over present cells, and the fraction of all bins whose
    cell meets the threshold."""
    out = {}
    for sid, row in zip(matrix.step_ids, matrix.cells):
        present = [v for v in row if v is not None]
        average = sum(present) / len(present) if present else None
        hits = sum(1 for v in present if v >= threshold)
        coverage = hits / matrix.n_bins if matrix.n_bins else 0.0
        out[sid] = {"average": average, "coverage": coverage}
    return out
