"""Live session runtime: one ingest pipeline per session.

Every accepted input event is recorded to its topic and fully processed
before the ingest call returns: the step tracker advances, errors and
guidance are published to their derived topics, and the spatial memory is
updated. Because the pipeline is synchronous and single-threaded per
session, replaying the same inputs in the same order reproduces the derived
topics and the output feed exactly.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from ..memory3d import CameraModel, Detection2D, ObjectMemory
from ..reasoning import (
    finalize as reasoning_finalize,
    init_session,
    observe,
    prompts_for_transition,
    instruction_prompt,
)
from ..stream_bus import StreamBus, validate_payload
from ..task_model import TaskGraph

# Input payload tag -> topic. Anything else arriving via ingest is derived
# output and gets rejected.
INPUT_TOPICS = {
    "object_state_event": "object_states",
    "hoi_event": "hoi",
    "workload_sample": "workload",
    "phase_marker": "phases",
    "error_event": "errors",
    "camera_pose": "camera_pose",
    "gaze_sample": "gaze",
    "detection_set": "detections",
    "rgb_frame_ref": "rgb",
    "depth_frame_ref": "depth",
}

DERIVED_TOPICS = {
    "reasoning.steps": "step_estimate",
    "reasoning.errors": "error_event",
    "guidance": "guidance_prompt",
    "memory3d": "tracklet_set",
}

# error_event is dual-use: external components report their own errors into
# the "errors" input topic, while the step tracker publishes to
# "reasoning.errors". Only tags with no input topic are refused at ingest.
_DERIVED_ONLY_TAGS = set(DERIVED_TOPICS.values()) - set(INPUT_TOPICS)

# Ingesting this marker closes the session from inside the event stream, so
# a replayed recording finalizes itself at the same point.
SESSION_END_TRACK = "session"
SESSION_END_LABEL = "end"


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class FeedRecord:
    index: int
    topic: str
    seq: int
    ts_ns: int
    payload: dict


def session_end_marker() -> dict:
    return {"tag": "phase_marker", "label": SESSION_END_LABEL, "track": SESSION_END_TRACK}


class SessionRuntime:
    def __init__(self, task: TaskGraph, session_id: str,
                 epoch_wall_clock: str | None = None):
        self.task = task
        self.bus = StreamBus(session_id, task.task_id, epoch_wall_clock)
        for tag, topic in INPUT_TOPICS.items():
            self.bus.create_topic(topic, tag)
        for topic, tag in DERIVED_TOPICS.items():
            self.bus.create_topic(topic, tag)

        self._lock = threading.Condition()
        self._feed: list[FeedRecord] = []
        self.state = init_session(task)
        self.memory = ObjectMemory()
        self.cam: CameraModel | None = None
        self.overloaded = False
        self.finalized = False

        with self._lock:
            self._emit("reasoning.steps", 0, self._estimate_payload())
            self._emit("guidance", 0,
                       instruction_prompt(task, self.state.current_step_id))

    @property
    def session_id(self) -> str:
        return self.bus.session_id

    def _estimate_payload(self) -> dict:
        return {"tag": "step_estimate", "step_id": self.state.current_step_id,
                "confidence": 1.0, "source": "reasoning"}

    def _emit(self, topic: str, ts_ns: int, payload: dict) -> None:
        seq = self.bus.publish(topic, ts_ns, payload)
        self._feed.append(FeedRecord(len(self._feed), topic, seq, ts_ns, payload))
        self._lock.notify_all()

    def ingest(self, ts_ns: int, payload: dict) -> dict:
        """Record one input event and run everything it triggers.

        Returns an ack naming the topic, the assigned sequence number, and
        how many derived records the event produced. Raises IngestError for
        derived tags, malformed payloads, or events after finalization.
        """
        tag = payload.get("tag")
        if tag in _DERIVED_ONLY_TAGS:
            raise IngestError(f"tag {tag!r} is produced by the runtime, not ingested")
        topic = INPUT_TOPICS.get(tag)
        if topic is None:
            raise IngestError(f"unknown payload tag {tag!r}")
        validate_payload(payload, tag)

        with self._lock:
            if self.finalized:
                raise IngestError("session is finalized")
            seq = self.bus.publish(topic, ts_ns, payload)
            before = len(self._feed)
            if tag == "camera_pose":
                self.cam = CameraModel.from_payload(payload)
            elif tag == "workload_sample":
                self.overloaded = payload["category"] == "overload"
            elif tag == "detection_set":
                self._run_memory(ts_ns, payload)
            elif tag == "object_state_event":
                self._run_reasoning(ts_ns, payload)
            elif tag == "phase_marker" and payload.get("track") == SESSION_END_TRACK:
                self._finalize(ts_ns)
            return {"session_id": self.session_id, "topic": topic, "seq": seq,
                    "derived": len(self._feed) - before}

    def _run_reasoning(self, ts_ns: int, payload: dict) -> None:
        prev = self.state.current_step_id
        self.state, advanced, errors = observe(
            self.state, ts_ns, payload["object_class"], payload["state"])
        for step_id in advanced:
            self._emit("reasoning.steps", ts_ns, {
                "tag": "step_estimate", "step_id": step_id,
                "confidence": 1.0, "source": "reasoning"})
        for err in errors:
            self._emit("reasoning.errors", ts_ns, err.to_payload())
        prompts = prompts_for_transition(
            self.task, prev, advanced, errors,
            self.memory, self.cam, simplify=self.overloaded)
        for prompt in prompts:
            self._emit("guidance", ts_ns, prompt)

    def _run_memory(self, ts_ns: int, payload: dict) -> None:
        if self.cam is None:
            self._emit("reasoning.errors", ts_ns, {
                "tag": "error_event", "kind": "no_camera_pose",
                "message": "detections arrived before any camera pose"})
            return
        batch = []
        for det in payload["detections"]:
            x, y, w, h = det["bbox"]
            batch.append((Detection2D(det["class"], det["confidence"], (x, y, w, h)),
                          det.get("depth_m", -1.0)))
        events = self.memory.update(batch, self.cam, ts_ns)
        if events:
            self._emit("memory3d", ts_ns, self.memory.export_payload())

    def _finalize(self, ts_ns: int) -> None:
        self.state = reasoning_finalize(self.state)
        self.finalized = True
        if self.memory.tracklets:
            self._emit("memory3d", ts_ns, self.memory.export_payload())
        self.bus.close()
        self._lock.notify_all()

    def finalize(self, ts_ns: int) -> dict:
        """Close the session by ingesting the end-of-session marker."""
        return self.ingest(ts_ns, session_end_marker())

    def feed_after(self, index: int, timeout: float | None = None) -> list[FeedRecord]:
        """Derived records with feed index >= index; blocks until there is
        something new, the session finalizes, or the timeout elapses."""
        with self._lock:
            if len(self._feed) <= index and not self.finalized:
                self._lock.wait(timeout)
            return self._feed[index:]

    def guidance_transcript(self) -> list[tuple[int, dict]]:
        return [(e.ts_ns, e.payload) for e in self.bus.read("guidance")]


def replay_inputs(loaded, task: TaskGraph) -> SessionRuntime:
    """Re-drive a recording's input topics through a fresh runtime.

    Derived topics in the recording are ignored; the runtime recomputes
    them. Input entries are replayed in (ts, topic, seq) order, which is the
    order the bus merges streams everywhere else.
    """
    runtime = SessionRuntime(task, loaded.session_id, loaded.epoch_wall_clock)
    merged = []
    for topic in loaded.topic_names():
        if topic not in INPUT_TOPICS.values():
            continue
        for entry in loaded.read(topic):
            merged.append((entry.ts_ns, topic, entry.seq, entry.payload))
    merged.sort(key=lambda row: (row[0], row[1], row[2]))
    for digest in loaded.blob_digests():
        runtime.bus.blobs.put(loaded.blob(digest))
    for ts_ns, _topic, _seq, payload in merged:
        runtime.ingest(ts_ns, payload)
    return runtime
