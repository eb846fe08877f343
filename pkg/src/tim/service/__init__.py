"""Live session runtime, HTTP facade, and command line tools."""

from .app import create_app, load_task_dir
from .runtime import (
    DERIVED_TOPICS,
    INPUT_TOPICS,
    SESSION_END_LABEL,
    SESSION_END_TRACK,
    FeedRecord,
    IngestError,
    SessionRuntime,
    replay_inputs,
    session_end_marker,
)

__all__ = [
    "DERIVED_TOPICS",
    "INPUT_TOPICS",
    "SESSION_END_LABEL",
    "SESSION_END_TRACK",
    "FeedRecord",
    "IngestError",
    "SessionRuntime",
    "create_app",
    "load_task_dir",
    "replay_inputs",
    "session_end_marker",
]
