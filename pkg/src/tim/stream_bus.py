"""In-process topic bus with durable session logs and deterministic replay.

One bus holds the streams of a single session. Every topic is an append-only
sequence with per-topic total order: seq starts at 1 and is gap-free. Entries
are plain JSON-serializable dicts tagged with the topic's schema tag.

On disk a session is a directory of NDJSON logs plus a manifest:

    sessions/<session_id>/<topic>.log      one {"seq", "ts_ns", "payload"} per line
    sessions/<session_id>/blobs/<digest>   content-addressed binary attachments
    sessions/<session_id>/manifest.json    topic list, entry counts, checksums
"""

from __future__ import annotations

import hashlib
import io
import json
import re
import shutil
import tempfile
import threading
import time
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np


class StreamBusError(RuntimeError):
    pass


class UnknownTopicError(StreamBusError):
    pass


class SchemaMismatchError(StreamBusError):
    pass


class TimestampRegressionError(StreamBusError):
    pass


class SessionClosedError(StreamBusError):
    pass


class ChecksumError(StreamBusError):
    pass


class BlobNotFoundError(StreamBusError):
    pass


# Required payload fields per schema tag. Extra fields are allowed; consumers
# ignore what they do not know.
PAYLOAD_TAGS: dict[str, set[str]] = {
    "rgb_frame_ref": {"blob", "width", "height"},
    "depth_frame_ref": {"blob", "width", "height"},
    "camera_pose": {"fx", "fy", "cx", "cy", "width", "height", "rotation", "translation"},
    "gaze_sample": {"direction"},
    "detection_set": {"detections"},
    "object_state_event": {"object_class", "state"},
    "hoi_event": {"object_class", "hand", "level"},
    "step_estimate": {"step_id", "confidence", "source"},
    "workload_sample": {"category"},
    "phase_marker": {"label"},
    "error_event": {"kind", "message"},
    "guidance_prompt": {"kind", "text"},
    "tracklet_set": {"tracklets"},
}

WORKLOAD_CATEGORIES = ("underload", "optimal", "overload")
GUIDANCE_KINDS = ("instruction", "simplified_instruction", "warning", "arrow", "completion")
HAND_TAGS = ("left", "right", "both", "none")
INTERACTION_LEVELS = ("direct", "indirect", "none")


def validate_payload(payload: object, schema_tag: str) -> None:
    """Raise SchemaMismatchError unless payload fits the tag's schema."""
    if not isinstance(payload, dict):
        raise SchemaMismatchError(f"payload must be a dict, got {type(payload).__name__}")
    tag = payload.get("tag")
    if tag not in PAYLOAD_TAGS:
        raise SchemaMismatchError(f"unknown payload tag {tag!r}")
    if tag != schema_tag:
        raise SchemaMismatchError(f"payload tag {tag!r} does not match topic schema {schema_tag!r}")
    missing = PAYLOAD_TAGS[tag] - set(payload)
    if missing:
        raise SchemaMismatchError(f"payload tag {tag!r} missing field(s): {', '.join(sorted(missing))}")
    if tag == "workload_sample" and payload["category"] not in WORKLOAD_CATEGORIES:
        raise SchemaMismatchError(f"workload category {payload['category']!r} not in {WORKLOAD_CATEGORIES}")
    if tag == "hoi_event":
        if payload["hand"] not in HAND_TAGS:
            raise SchemaMismatchError(f"hand {payload['hand']!r} not in {HAND_TAGS}")
        if payload["level"] not in INTERACTION_LEVELS:
            raise SchemaMismatchError(f"interaction level {payload['level']!r} not in {INTERACTION_LEVELS}")
    if tag == "guidance_prompt":
        if payload["kind"] not in GUIDANCE_KINDS:
            raise SchemaMismatchError(f"guidance kind {payload['kind']!r} not in {GUIDANCE_KINDS}")
        if payload["kind"] == "arrow" and not payload.get("target"):
            raise SchemaMismatchError("arrow prompt requires a target")
        if payload["kind"] != "completion" and not payload["text"]:
            raise SchemaMismatchError(f"{payload['kind']} prompt requires non-empty text")


@dataclass(frozen=True)
class StreamEntry:
    seq: int  # 1-based, per topic, gap-free
    ts_ns: int  # session-relative, non-negative
    payload: dict


@dataclass(frozen=True)
class TopicSummary:
    name: str
    schema_tag: str
    entries: int
    sha256: str


@dataclass(frozen=True)
class SessionManifest:
    session_id: str
    task_id: str
    epoch_wall_clock: str
    time_range: tuple[int, int] | None
    topics: tuple[TopicSummary, ...]

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "task_id": self.task_id,
            "epoch_wall_clock": self.epoch_wall_clock,
            "time_range": None if self.time_range is None else
                {"start_ns": self.time_range[0], "end_ns": self.time_range[1]},
            "topics": [
                {"name": t.name, "schema_tag": t.schema_tag,
                 "entries": t.entries, "sha256": t.sha256}
                for t in self.topics
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SessionManifest":
        tr = doc.get("time_range")
        return cls(
            session_id=doc["session_id"],
            task_id=doc["task_id"],
            epoch_wall_clock=doc["epoch_wall_clock"],
            time_range=None if tr is None else (tr["start_ns"], tr["end_ns"]),
            topics=tuple(TopicSummary(t["name"], t["schema_tag"], t["entries"], t["sha256"])
                         for t in doc["topics"]),
        )


class BlobStore:
    """Content-addressed bytes; the sha256 hex digest is the id."""

    def __init__(self):
        self._blobs: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def put(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        with self._lock:
            self._blobs[digest] = bytes(data)
        return digest

    def get(self, digest: str) -> bytes:
        with self._lock:
            try:
                return self._blobs[digest]
            except KeyError:
                raise BlobNotFoundError(f"no blob {digest}") from None

    def digests(self) -> list[str]:
        with self._lock:
            return sorted(self._blobs)

    def put_array(self, arr: np.ndarray) -> str:
        buf = io.BytesIO()
        np.save(buf, arr)
        return self.put(buf.getvalue())

    def get_array(self, digest: str) -> np.ndarray:
        return np.load(io.BytesIO(self.get(digest)))


_NAME_RE = re.compile(r"^[a-zA-Z0-9][a-zA-Z0-9._-]*$")


class _Topic:
    __slots__ = ("name", "schema_tag", "entries", "ts_index")

    def __init__(self, name: str, schema_tag: str):
        self.name = name
        self.schema_tag = schema_tag
        self.entries: list[StreamEntry] = []
        self.ts_index: list[int] = []  # parallel ts list for bisect


class StreamBus:
    """Streams of one session. Thread-safe; publish never blocks on readers."""

    def __init__(self, session_id: str, task_id: str, epoch_wall_clock: str | None = None):
        if not _NAME_RE.match(session_id):
            raise StreamBusError(f"invalid session id {session_id!r}")
        self.session_id = session_id
        self.task_id = task_id
        self.epoch_wall_clock = epoch_wall_clock or datetime.now(timezone.utc).isoformat(
            timespec="seconds")
        self.blobs = BlobStore()
        self._topics: dict[str, _Topic] = {}
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._closed = False

    # -- topology --

    def create_topic(self, name: str, schema_tag: str) -> None:
        if schema_tag not in PAYLOAD_TAGS:
            raise SchemaMismatchError(f"unknown schema tag {schema_tag!r}")
        if not _NAME_RE.match(name):
            raise StreamBusError(f"invalid topic name {name!r}")
        with self._cond:
            if self._closed:
                raise SessionClosedError(f"session {self.session_id} is closed")
            if name in self._topics:
                raise StreamBusError(f"topic {name!r} already exists")
            self._topics[name] = _Topic(name, schema_tag)

    def topic_names(self) -> list[str]:
        with self._lock:
            return sorted(self._topics)

    def schema_tag(self, topic: str) -> str:
        return self._get(topic).schema_tag

    def _get(self, topic: str) -> _Topic:
        try:
            return self._topics[topic]
        except KeyError:
            raise UnknownTopicError(f"unknown topic {topic!r}") from None

    # -- write path --

    def publish(self, topic: str, ts_ns: int, payload: dict) -> int:
        if not isinstance(ts_ns, int) or ts_ns < 0:
            raise StreamBusError(f"ts_ns must be a non-negative int, got {ts_ns!r}")
        with self._cond:
            if self._closed:
                raise SessionClosedError(f"session {self.session_id} is closed")
            t = self._get(topic)
            validate_payload(payload, t.schema_tag)
            if t.ts_index and ts_ns < t.ts_index[-1]:
                raise TimestampRegressionError(
                    f"ts_ns {ts_ns} precedes last entry at {t.ts_index[-1]} on topic {topic!r}")
            entry = StreamEntry(len(t.entries) + 1, ts_ns, payload)
            t.entries.append(entry)
            t.ts_index.append(ts_ns)
            self._cond.notify_all()
            return entry.seq

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        return self._closed

    def wait_closed(self, timeout: float | None = None) -> bool:
        with self._cond:
            return self._cond.wait_for(lambda: self._closed, timeout)

    # -- read path --

    def read(self, topic: str, from_seq: int = 0) -> list[StreamEntry]:
        """Entries with seq > from_seq, without blocking. from_seq=0 reads all."""
        with self._lock:
            return list(self._get(topic).entries[from_seq:])

    def subscribe(self, topic: str, from_seq: int = 0):
        """Iterate entries with seq > from_seq, tailing live until the session closes."""
        with self._lock:
            self._get(topic)  # fail fast on unknown topic
        next_idx = from_seq
        while True:
            with self._cond:
                t = self._get(topic)
                while len(t.entries) <= next_idx and not self._closed:
                    self._cond.wait()
                if len(t.entries) <= next_idx:
                    return
                chunk = t.entries[next_idx:]
            yield from chunk
            next_idx += len(chunk)

    def snapshot_latest(self, topics: list[str], t_ns: int) -> dict[str, StreamEntry | None]:
        """Latest entry with ts_ns <= t_ns per topic (boundary inclusive)."""
        out: dict[str, StreamEntry | None] = {}
        with self._lock:
            for name in topics:
                t = self._get(name)
                i = bisect_right(t.ts_index, t_ns)
                out[name] = t.entries[i - 1] if i else None
        return out

    def time_range(self) -> tuple[int, int] | None:
        with self._lock:
            starts = [t.ts_index[0] for t in self._topics.values() if t.ts_index]
            ends = [t.ts_index[-1] for t in self._topics.values() if t.ts_index]
        if not starts:
            return None
        return min(starts), max(ends)


def _entry_line(e: StreamEntry) -> str:
    return json.dumps({"seq": e.seq, "ts_ns": e.ts_ns, "payload": e.payload},
                      sort_keys=True, separators=(",", ":")) + "\n"


class SessionStore:
    """Filesystem layout and checksum bookkeeping under one root directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.sessions_dir = self.root / "sessions"

    def session_dir(self, session_id: str) -> Path:
        return self.sessions_dir / session_id

    def list_sessions(self) -> list[str]:
        if not self.sessions_dir.is_dir():
            return []
        return sorted(p.name for p in self.sessions_dir.iterdir()
                      if (p / "manifest.json").is_file())

    def persist(self, bus: StreamBus) -> SessionManifest:
        """Write the session durably; idempotent for a quiesced session.

        Output is built in a temp directory and swapped in whole, so a failed
        persist leaves either the previous complete session or nothing.
        """
        names = bus.topic_names()
        if not names:
            raise StreamBusError("session has no topics to persist")
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(prefix=f".{bus.session_id}-", dir=self.sessions_dir))
        try:
            summaries = []
            for name in names:
                body = "".join(_entry_line(e) for e in bus.read(name)).encode()
                (tmp / f"{name}.log").write_bytes(body)
                summaries.append(TopicSummary(name, bus.schema_tag(name),
                                              len(bus.read(name)),
                                              hashlib.sha256(body).hexdigest()))
            blob_dir = tmp / "blobs"
            blob_dir.mkdir()
            for digest in bus.blobs.digests():
                (blob_dir / digest).write_bytes(bus.blobs.get(digest))
            manifest = SessionManifest(bus.session_id, bus.task_id, bus.epoch_wall_clock,
                                       bus.time_range(), tuple(summaries))
            (tmp / "manifest.json").write_text(
                json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
            final = self.session_dir(bus.session_id)
            if final.exists():
                shutil.rmtree(final)
            tmp.rename(final)
            return manifest
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise

    def load(self, session_id: str) -> "LoadedSession":
        """Read a persisted session back, verifying every topic checksum."""
        sdir = self.session_dir(session_id)
        manifest_path = sdir / "manifest.json"
        if not manifest_path.is_file():
            raise StreamBusError(f"no persisted session {session_id!r} under {self.root}")
        manifest = SessionManifest.from_dict(json.loads(manifest_path.read_text()))
        topics: dict[str, list[StreamEntry]] = {}
        for summary in manifest.topics:
            log = sdir / f"{summary.name}.log"
            if not log.is_file():
                raise ChecksumError(f"missing log file for topic {summary.name!r}")
            body = log.read_bytes()
            digest = hashlib.sha256(body).hexdigest()
            if digest != summary.sha256:
                raise ChecksumError(
                    f"checksum mismatch on topic {summary.name!r}:"
                    f" manifest {summary.sha256}, file {digest}")
            entries = []
            for line in body.decode().splitlines():
                rec = json.loads(line)
                entries.append(StreamEntry(rec["seq"], rec["ts_ns"], rec["payload"]))
            if len(entries) != summary.entries:
                raise ChecksumError(
                    f"entry count mismatch on topic {summary.name!r}:"
                    f" manifest {summary.entries}, file {len(entries)}")
            topics[summary.name] = entries
        return LoadedSession(manifest, topics, sdir / "blobs")


class LoadedSession:
    """Read-only view of a persisted session; mirrors the bus read API."""

    def __init__(self, manifest: SessionManifest, topics: dict[str, list[StreamEntry]],
                 blob_dir: Path):
        self.manifest = manifest
        self._topics = topics
        self._blob_dir = blob_dir

    @property
    def session_id(self) -> str:
        return self.manifest.session_id

    @property
    def task_id(self) -> str:
        return self.manifest.task_id

    @property
    def epoch_wall_clock(self) -> str:
        return self.manifest.epoch_wall_clock

    def topic_names(self) -> list[str]:
        return sorted(self._topics)

    def schema_tag(self, topic: str) -> str:
        for t in self.manifest.topics:
            if t.name == topic:
                return t.schema_tag
        raise UnknownTopicError(f"unknown topic {topic!r}")

    def read(self, topic: str, from_seq: int = 0) -> list[StreamEntry]:
        try:
            return list(self._topics[topic][from_seq:])
        except KeyError:
            raise UnknownTopicError(f"unknown topic {topic!r}") from None

    def snapshot_latest(self, topics: list[str], t_ns: int) -> dict[str, StreamEntry | None]:
        out: dict[str, StreamEntry | None] = {}
        for name in topics:
            entries = self.read(name)
            ts = [e.ts_ns for e in entries]
            i = bisect_right(ts, t_ns)
            out[name] = entries[i - 1] if i else None
        return out

    def time_range(self) -> tuple[int, int] | None:
        return self.manifest.time_range

    def blob(self, digest: str) -> bytes:
        path = self._blob_dir / digest
        if not path.is_file():
            raise BlobNotFoundError(f"no blob {digest}")
        return path.read_bytes()

    def blob_array(self, digest: str) -> np.ndarray:
        return np.load(io.BytesIO(self.blob(digest)))

    def blob_digests(self) -> list[str]:
        if not self._blob_dir.is_dir():
            return []
        return sorted(p.name for p in self._blob_dir.iterdir())


def persist_session(bus: StreamBus, root: str | Path) -> SessionManifest:
    return SessionStore(root).persist(bus)


def replay_session(root: str | Path, session_id: str, speed: float | str) -> StreamBus:
    """Re-publish a persisted session onto a fresh bus, preserving seq/ts/payload.

    Entries across topics are merged by (ts_ns, topic, seq). With a float
    speed, inter-entry gaps are scaled by 1/speed in wall-clock time; the
    string "max" replays without delay. The returned bus is live immediately;
    it closes when the replay thread finishes.
    """
    if speed != "max" and (not isinstance(speed, (int, float)) or isinstance(speed, bool)
                           or speed <= 0):
        raise StreamBusError(f"speed must be a positive number or 'max', got {speed!r}")
    loaded = SessionStore(root).load(session_id)
    bus = StreamBus(loaded.session_id, loaded.task_id, loaded.epoch_wall_clock)
    for name in loaded.topic_names():
        bus.create_topic(name, loaded.schema_tag(name))
    for digest in loaded.blob_digests():
        bus.blobs.put(loaded.blob(digest))
    merged = sorted(
        ((e.ts_ns, name, e.seq, e.payload)
         for name in loaded.topic_names() for e in loaded.read(name)),
        key=lambda rec: (rec[0], rec[1], rec[2]),
    )

    def run():
        prev_ts = None
        try:
            for ts, name, seq, payload in merged:
                if speed != "max" and prev_ts is not None and ts > prev_ts:
                    time.sleep((ts - prev_ts) / float(speed) / 1e9)
                prev_ts = ts
                got = bus.publish(name, ts, payload)
                if got != seq:  # per-topic order restores the original numbering
                    raise StreamBusError(f"replay seq drift on {name}: {got} != {seq}")
        finally:
            bus.close()

    threading.Thread(target=run, name=f"replay-{session_id}", daemon=True).start()
    return bus
