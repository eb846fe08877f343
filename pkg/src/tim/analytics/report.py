"""Whole-session analysis: pulls topics from a recorded or live session and
computes the derived views in one pass, plus an XML rendering of the result.

Works against anything with the bus read API (`read`, `topic_names`,
`time_range`, `session_id`, `task_id`), so both live buses and loaded
recordings analyze identically.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from ..stream_bus import GUIDANCE_KINDS, WORKLOAD_CATEGORIES
from .model_output import ConfidenceMatrix, confidence_matrix, global_summaries
from .timeline import (
    Segment,
    hold_segments,
    phi_coefficient,
    summary_matrix,
    workload_distribution,
)

# Topic layout produced by the session runtime.
TOPIC_STEPS = "reasoning.steps"
TOPIC_ERRORS = "reasoning.errors"
TOPIC_GUIDANCE = "guidance"
TOPIC_WORKLOAD = "workload"
TOPIC_PHASES = "phases"
TOPIC_MEMORY = "memory3d"


@dataclass
class SessionReport:
    session_id: str
    task_id: str
    t0_ns: int
    t1_ns: int
    step_segments: list[Segment] = field(default_factory=list)
    workload_segments: list[Segment] = field(default_factory=list)
    phase_segments: list[Segment] = field(default_factory=list)
    procedure_segments: list[Segment] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    confidence: ConfidenceMatrix | None = None
    summaries: dict = field(default_factory=dict)
    distribution: dict = field(default_factory=dict)
    phi: dict = field(default_factory=dict)
    prompt_counts: dict = field(default_factory=dict)
    objects: list[dict] = field(default_factory=list)

    @property
    def duration_s(self) -> float:
        return (self.t1_ns - self.t0_ns) / 1e9


def _entries(session, topic: str) -> list:
    return session.read(topic) if topic in session.topic_names() else []


def analyze_session(session, bin_width_s: float = 10.0,
                    threshold: float = 0.5) -> SessionReport:
    t_range = session.time_range()
    t0, t1 = t_range if t_range else (0, 0)
    report = SessionReport(session.session_id, session.task_id, t0, t1)

    estimates = [(e.ts_ns, e.payload["step_id"], e.payload["confidence"])
                 for e in _entries(session, TOPIC_STEPS)]
    report.step_segments = hold_segments(
        [(ts, sid) for ts, sid, _ in estimates], t1)
    report.confidence = confidence_matrix(estimates, bin_width_s)
    report.summaries = global_summaries(report.confidence, threshold)

    workload = [(e.ts_ns, e.payload["category"])
                for e in _entries(session, TOPIC_WORKLOAD)]
    report.workload_segments = hold_segments(workload, t1)
    report.distribution = workload_distribution(report.workload_segments, t0, t1)

    phases, procedures = [], []
    for e in _entries(session, TOPIC_PHASES):
        track = e.payload.get("track", "phase")
        (procedures if track == "procedure" else phases).append(
            (e.ts_ns, e.payload["label"]))
    report.phase_segments = hold_segments(phases, t1)
    report.procedure_segments = hold_segments(procedures, t1)

    report.errors = [{"ts_ns": e.ts_ns, **e.payload}
                     for e in _entries(session, TOPIC_ERRORS)]

    counts = {kind: 0 for kind in GUIDANCE_KINDS}
    for e in _entries(session, TOPIC_GUIDANCE):
        counts[e.payload["kind"]] += 1
    report.prompt_counts = counts

    memory_entries = _entries(session, TOPIC_MEMORY)
    if memory_entries:
        report.objects = list(memory_entries[-1].payload["tracklets"])

    report.phi = {
        sid: {cat: phi_coefficient(report.step_segments, sid,
                                   report.workload_segments, cat, t0, t1)
              for cat in WORKLOAD_CATEGORIES}
        for sid in dict.fromkeys(s.label for s in report.step_segments)
    }
    return report


def _rel_s(ts_ns: int, t0_ns: int) -> str:
    return f"{(ts_ns - t0_ns) / 1e9:.2f}"


def _segments_el(parent: ET.Element, name: str, segments: list[Segment], t0: int):
    block = ET.SubElement(parent, name)
    for seg in segments:
        ET.SubElement(block, "segment", label=seg.label,
                      start_s=_rel_s(seg.t_start_ns, t0),
                      end_s=_rel_s(seg.t_end_ns, t0))
    return block


def report_to_xml(report: SessionReport) -> str:
    root = ET.Element("session", id=report.session_id, task=report.task_id,
                      duration_s=f"{report.duration_s:.2f}")
    t0 = report.t0_ns
    _segments_el(root, "steps", report.step_segments, t0)

    workload = _segments_el(root, "workload", report.workload_segments, t0)
    for cat in WORKLOAD_CATEGORIES:
        ET.SubElement(workload, "share", category=cat,
                      fraction=f"{report.distribution.get(cat, 0.0):.4f}")

    _segments_el(root, "phases", report.phase_segments, t0)
    _segments_el(root, "procedures", report.procedure_segments, t0)

    errors = ET.SubElement(root, "errors")
    for err in report.errors:
        ET.SubElement(errors, "error", kind=err.get("kind", ""),
                      step=str(err.get("step_id", "")),
                      at_s=_rel_s(err["ts_ns"], t0))

    conf = ET.SubElement(root, "confidence")
    if report.confidence is not None:
        conf.set("bins", str(report.confidence.n_bins))
        conf.set("bin_width_s", f"{report.confidence.bin_width_s:.2f}")
        for sid in report.confidence.step_ids:
            summary = report.summaries.get(sid, {})
            avg = summary.get("average")
            ET.SubElement(conf, "step", id=sid,
                          average="" if avg is None else f"{avg:.4f}",
                          coverage=f"{summary.get('coverage', 0.0):.4f}")

    assoc = ET.SubElement(root, "associations")
    for sid, row in report.phi.items():
        for cat, value in row.items():
            ET.SubElement(assoc, "phi", step=sid, category=cat, value=f"{value:.4f}")

    guidance = ET.SubElement(root, "guidance")
    for kind in GUIDANCE_KINDS:
        ET.SubElement(guidance, "prompts", kind=kind,
                      count=str(report.prompt_counts.get(kind, 0)))

    objects = ET.SubElement(root, "objects")
    for obj in report.objects:
        ET.SubElement(objects, "object", id=str(obj["object_id"]),
                      cls=obj["class"], status=obj["status"])

    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode")
