"""Session timelines: labeled segments, overlap matrices, and association.

Sampled labels (current step, workload category) follow a hold rule: each
sample holds until the next one arrives, and the last sample extends to the
end of the session.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..stream_bus import WORKLOAD_CATEGORIES


@dataclass(frozen=True)
class Segment:
    label: str
    t_start_ns: int
    t_end_ns: int

    @property
    def duration_s(self) -> float:
        return (self.t_end_ns - self.t_start_ns) / 1e9


def hold_segments(samples: list[tuple[int, str]], end_ns: int) -> list[Segment]:
    """Merge consecutive equal labels; the final segment runs to end_ns."""
    if not samples:
        return []
    if any(b[0] < a[0] for a, b in zip(samples, samples[1:])):
        raise ValueError("samples must be in timestamp order")
    out: list[Segment] = []
    start_ts, current = samples[0]
    for ts, label in samples[1:]:
        if label != current:
            out.append(Segment(current, start_ts, ts))
            start_ts, current = ts, label
    out.append(Segment(current, start_ts, max(end_ns, samples[-1][0])))
    return out


def _intersect_ns(a: list[Segment], b: list[Segment]) -> int:
    total = 0
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i].t_start_ns, b[j].t_start_ns)
        hi = min(a[i].t_end_ns, b[j].t_end_ns)
        if lo < hi:
            total += hi - lo
        if a[i].t_end_ns <= b[j].t_end_ns:
            i += 1
        else:
            j += 1
    return total


def _label_time_ns(segments: list[Segment], label: str) -> int:
    return sum(s.t_end_ns - s.t_start_ns for s in segments if s.label == label)


def _only(segments: list[Segment], label: str) -> list[Segment]:
    return [s for s in segments if s.label == label]


def summary_matrix(step_segments: list[Segment],
                   workload_segments: list[Segment],
                   categories: tuple[str, ...] = WORKLOAD_CATEGORIES):
    """Seconds of overlap for each (step, workload category) pair.

    Step rows appear in order of first appearance on the timeline.
    """
    steps: list[str] = []
    for seg in step_segments:
        if seg.label not in steps:
            steps.append(seg.label)
    matrix = [[_intersect_ns(_only(step_segments, sid), _only(workload_segments, cat)) / 1e9
               for cat in categories]
              for sid in steps]
    return steps, list(categories), matrix


def phi_coefficient(segments_x: list[Segment], x_label: str,
                    segments_y: list[Segment], y_label: str,
                    t0_ns: int, t1_ns: int) -> float:
    """Association between two binary timelines over [t0, t1].

    Returns 0.0 when either side has zero variance (always or never active).
    """
    if t1_ns <= t0_ns:
        return 0.0
    total = t1_ns - t0_ns
    xs = _only(segments_x, x_label)
    ys = _only(segments_y, y_label)
    a = _intersect_ns(xs, ys)
    x = _label_time_ns(segments_x, x_label)
    y = _label_time_ns(segments_y, y_label)
    b = x - a
    c = y - a
    d = total - x - y + a
    denom = math.sqrt(float(x) * (total - x) * float(y) * (total - y))
    if denom == 0.0:
        return 0.0
    return (float(a) * d - float(b) * c) / denom


def workload_distribution(workload_segments: list[Segment],
                          t0_ns: int, t1_ns: int,
                          categories: tuple[str, ...] = WORKLOAD_CATEGORIES) -> dict:
    """Fraction of the session spent in each category; all zero when the
    session recorded no workload samples."""
    span = t1_ns - t0_ns
    if span <= 0 or not workload_segments:
        return {cat: 0.0 for cat in categories}
    return {cat: _label_time_ns(workload_segments, cat) / span for cat in categories}
