"""Offline and live session analytics."""

from .metrics import eval_metrics, format_mean_std
from .model_output import ConfidenceMatrix, confidence_matrix, global_summaries
from .report import SessionReport, analyze_session, report_to_xml
from .spatial import (
    DEFAULT_GAZE_DEPTH_M,
    build_point_cloud,
    depth_frame_points,
    dwell_by_object,
    gaze_points,
    ply_text,
    write_ply,
)
from .timeline import (
    Segment,
    hold_segments,
    phi_coefficient,
    summary_matrix,
    workload_distribution,
)

__all__ = [
    "ConfidenceMatrix",
    "DEFAULT_GAZE_DEPTH_M",
    "SessionReport",
    "Segment",
    "analyze_session",
    "build_point_cloud",
    "confidence_matrix",
    "depth_frame_points",
    "dwell_by_object",
    "eval_metrics",
    "format_mean_std",
    "gaze_points",
    "global_summaries",
    "hold_segments",
    "phi_coefficient",
    "ply_text",
    "report_to_xml",
    "summary_matrix",
    "workload_distribution",
    "write_ply",
]
