"""Run a synthetic session end to end, then pull every report from it.

Run from the repository root:

    python3 demos/06_analytics.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from tim.analytics import (
    analyze_session,
    build_point_cloud,
    dwell_by_object,
    format_mean_std,
    gaze_points,
    ply_text,
    report_to_xml,
    summary_matrix,
)
from tim.memory3d import CameraModel
from tim.service import SessionRuntime, session_end_marker
from tim.task_model import parse_task_definition

SEC = 1_000_000_000

TEA = {
    "task_id": "tea",
    "name": "Cup of Tea",
    "objects": [
        {"class": "kettle", "states": ["idle", "filled", "boiled"]},
        {"class": "cup", "states": ["empty", "with-bag", "steeping"]},
    ],
    "steps": [
        {"id": "s1", "instruction": "Fill the kettle and start it",
         "required_objects": ["kettle"]},
        {"id": "s2", "instruction": "Drop a tea bag in the cup",
         "required_objects": ["cup"]},
        {"id": "s3", "instruction": "Pour the boiling water",
         "required_objects": ["kettle", "cup"]},
    ],
    "edges": [
        {"from": "s1", "to": "s2", "goal": {"class": "kettle", "state": "filled"}},
        {"from": "s2", "to": "s3", "goal": {"class": "cup", "state": "with-bag"}},
    ],
}


def forward_camera() -> CameraModel:
    return CameraModel(fx=400.0, fy=400.0, cx=320.0, cy=240.0,
                       width=640, height=480,
                       rotation=np.eye(3), translation=np.zeros(3))


def run_session() -> SessionRuntime:
    rt = SessionRuntime(parse_task_definition(json.dumps(TEA)), "tea-001")
    script = [
        (0, {"tag": "workload_sample", "category": "optimal"}),
        (2, {"tag": "phase_marker", "track": "phase", "label": "setup"}),
        (5, {"tag": "object_state_event", "object_class": "kettle",
             "state": "filled", "confidence": 0.9}),
        (12, {"tag": "workload_sample", "category": "overload"}),
        (20, {"tag": "object_state_event", "object_class": "cup",
              "state": "with-bag", "confidence": 0.8}),
        (28, {"tag": "workload_sample", "category": "optimal"}),
        (30, {"tag": "phase_marker", "track": "phase", "label": "brewing"}),
        (40, session_end_marker()),
    ]
    for ts_s, payload in script:
        rt.ingest(ts_s * SEC, payload)
    return rt


def session_reports(rt: SessionRuntime):
    report = analyze_session(rt.bus)
    print(f"session {report.session_id} ({report.task_id}), "
          f"{report.duration_s:.0f}s")

    print("\ntime on each step:")
    for seg in report.step_segments:
        print(f"  {seg.label}: {seg.duration_s:.0f}s")
    print("workload share: " + ", ".join(
        f"{cat} {share:.0%}" for cat, share in report.distribution.items()))
    print("phases: " + " -> ".join(s.label for s in report.phase_segments))
    print("prompts: " + ", ".join(
        f"{k}={n}" for k, n in report.prompt_counts.items() if n))

    confidences = [cell for row in report.confidence.cells
                   for cell in row if cell is not None]
    print(f"step confidence over the run: {format_mean_std(confidences)}")

    overload_phi = report.phi["s2"]["overload"]
    print(f"s2 ran mostly under overload; association coefficient "
          f"{overload_phi:+.2f}")

    steps, cats, matrix = summary_matrix(report.step_segments,
                                         report.workload_segments)
    print("seconds of overlap per step and workload category:")
    for label, row in zip(steps, matrix):
        cells = "  ".join(f"{cat}={sec:4.0f}" for cat, sec in zip(cats, row))
        print(f"  {label}: {cells}")

    xml = report_to_xml(report)
    print("\nXML document starts:")
    for line in xml.splitlines()[:4]:
        print(f"  {line}")
    return report


def spatial_outputs():
    cam = forward_camera()
    depth = np.full((480, 640), 2.0)
    depth[:240, :] = 1.2  # nearer surface in the top half
    cloud = build_point_cloud([(depth, cam)], stride=40)
    print(f"\ndepth frame unprojects to {cloud.shape[0]} world points")
    text = ply_text(cloud)
    print("PLY header: " + " | ".join(text.splitlines()[:3]))
    with tempfile.TemporaryDirectory() as root:
        path = Path(root) / "scene.ply"
        path.write_text(text)
        print(f"wrote {path.name} ({path.stat().st_size} bytes)")

    samples = [(t * SEC, np.array([0.0, 0.0, 1.0])) for t in range(10)]
    poses = [(0, cam)]
    points = gaze_points(samples, poses, depth_m=1.5)
    dwell = dwell_by_object(points, [(7, np.array([0.0, 0.0, 1.5])),
                                     (8, np.array([2.0, 0.0, 0.0]))],
                            end_ns=10 * SEC)
    print(f"gaze dwelled {dwell[7]:.0f}s on object 7 and "
          f"{dwell[8]:.0f}s on object 8")


def main():
    rt = run_session()
    session_reports(rt)
    spatial_outputs()


if __name__ == "__main__":
    main()
