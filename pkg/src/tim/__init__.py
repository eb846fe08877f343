"""Desk-scale task guidance: streams, task graphs, perception, reasoning,
3D object memory, analytics, and a live HTTP service."""

__version__ = "0.1.0"

from .stream_bus import (
    GUIDANCE_KINDS,
    HAND_TAGS,
    INTERACTION_LEVELS,
    PAYLOAD_TAGS,
    WORKLOAD_CATEGORIES,
    SessionStore,
    StreamBus,
    validate_payload,
)
from .task_model import TaskGraph, load_task_file, parse_task_definition

__all__ = [
    "GUIDANCE_KINDS",
    "HAND_TAGS",
    "INTERACTION_LEVELS",
    "PAYLOAD_TAGS",
    "WORKLOAD_CATEGORIES",
    "SessionStore",
    "StreamBus",
    "TaskGraph",
    "__version__",
    "load_task_file",
    "parse_task_definition",
    "validate_payload",
]
