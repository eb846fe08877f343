"""Drive a scripted session through the HTTP service and watch guidance live.

Starts the service in-process on an ephemeral port, streams the guidance
topic over SSE while events arrive, then pulls the post-session reports.
Needs the dev extras (httpx, uvicorn).

Run from the repository root:

    python3 demos/07_live_service.py
"""

import json
import shutil
import tempfile
import threading
import time
from pathlib import Path

import httpx
import uvicorn

from tim.service import create_app, session_end_marker

SEC = 1_000_000_000
TASKS = Path(__file__).resolve().parent.parent / "tests" / "data"

SCRIPT = [
    (1, {"tag": "workload_sample", "category": "optimal"}),
    (5, {"tag": "object_state_event", "object_class": "tortilla",
         "state": "on-board", "confidence": 0.93}),
    (12, {"tag": "workload_sample", "category": "overload"}),
    (20, {"tag": "object_state_event", "object_class": "knife",
          "state": "with-nut-butter", "confidence": 0.88}),
    (30, {"tag": "object_state_event", "object_class": "tortilla",
          "state": "with-nut-butter", "confidence": 0.91}),
    (40, {"tag": "object_state_event", "object_class": "tortilla",
          "state": "with-jelly", "confidence": 0.9}),
    (48, {"tag": "object_state_event", "object_class": "tortilla",
          "state": "folded", "confidence": 0.95}),
    (60, {"tag": "object_state_event", "object_class": "tortilla",
          "state": "cut-in-half", "confidence": 0.9}),
    (70, session_end_marker()),
]


def start_service(root: Path) -> tuple[uvicorn.Server, threading.Thread, str]:
    config = uvicorn.Config(create_app(root), host="127.0.0.1", port=0,
                            log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    return server, thread, f"http://127.0.0.1:{port}"


def stream_guidance(base: str, session_id: str, prompts: list):
    with httpx.Client(timeout=30) as client:
        with client.stream(
                "GET", f"{base}/sessions/{session_id}/guidance") as resp:
            for line in resp.iter_lines():
                if line.startswith("data: "):
                    record = json.loads(line[len("data: "):])
                    prompts.append(record["payload"])
                elif line.startswith("event: end"):
                    break


def main():
    with tempfile.TemporaryDirectory() as root:
        data = Path(root)
        (data / "tasks").mkdir()
        shutil.copy(TASKS / "quesadilla.json", data / "tasks" / "quesadilla.json")
        server, thread, base = start_service(data)
        print(f"service up at {base}")

        with httpx.Client(base_url=base, timeout=10) as client:
            tasks = client.get("/tasks").json()
            print(f"task catalog: "
                  + ", ".join(f"{t['task_id']} ({t['steps']} steps)" for t in tasks))

            created = client.post("/sessions", json={
                "task_id": "quesadilla", "session_id": "demo-http"}).json()
            print(f"created session {created['session_id']}, "
                  f"starting at step {created['current_step']}\n")

            prompts: list = []
            watcher = threading.Thread(
                target=stream_guidance, args=(base, "demo-http", prompts),
                daemon=True)
            watcher.start()

            for ts_s, payload in SCRIPT:
                ack = client.post("/sessions/demo-http/events", json={
                    "ts_ns": ts_s * SEC, "payload": payload}).json()
                label = payload.get("state", payload.get("category",
                                                         payload.get("label")))
                print(f"t={ts_s:2d}s  sent {payload['tag']}={label!r}, "
                      f"{ack['derived']} derived records")

            watcher.join(timeout=10)
            print(f"\nSSE delivered {len(prompts)} guidance prompts; first three:")
            for p in prompts[:3]:
                text = p.get("text") or f"point at {p['target']['object_class']}"
                print(f"  [{p['kind']}] {text}")

            done = client.post("/sessions/demo-http/finalize", json={}).json()
            print(f"\nfinalize persisted {done['topics']} topics "
                  f"({done['errors']} errors)")

            timeline = client.get("/sessions/demo-http/analytics/timeline").json()
            steps = " -> ".join(s["label"] for s in timeline["steps"])
            print(f"timeline: {steps}")
            xml = client.get("/sessions/demo-http/analytics/document").text
            print(f"XML report is {len(xml.splitlines())} lines")

        server.should_exit = True
        thread.join(timeout=10)
        print("service stopped")


if __name__ == "__main__":
    main()
