"""Command line entry points.

The data directory (sessions, tasks) defaults to the TIM_DATA_DIR
environment variable, falling back to ./tim-data.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ..analytics import analyze_session, format_mean_std, report_to_xml, summary_matrix
from ..stream_bus import SessionStore
from ..task_model import TaskDefinitionError, load_task_file, parse_task_definition
from .app import create_app, load_task_dir
from .runtime import SessionRuntime, replay_inputs

_data_dir_option = click.option(
    "--data-dir", envvar="TIM_DATA_DIR", default="tim-data", show_default=True,
    type=click.Path(file_okay=False), help="Session and task storage root.")


@click.group()
def main():
    """Desk-scale task guidance: record, replay, serve, and analyze sessions."""


@main.command()
@_data_dir_option
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--static-dir", default=None, type=click.Path(file_okay=False),
              help="Directory with the built web console, served under /app.")
def serve(data_dir, host, port, static_dir):
    """Run the HTTP service."""
    import uvicorn

    if static_dir is None:
        bundled = Path(__file__).resolve().parents[3] / "frontend" / "dist"
        static_dir = str(bundled) if bundled.is_dir() else None
    app = create_app(data_dir, static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@_data_dir_option
@click.option("--task", "task_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Task definition JSON.")
@click.option("--script", "script_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="NDJSON event script: one {\"ts_ns\", \"payload\"} per line.")
@click.option("--session-id", required=True)
def record(data_dir, task_path, script_path, session_id):
    """Drive a scripted session through the runtime and persist it."""
    task = load_task_file(task_path)
    runtime = SessionRuntime(task, session_id)
    n_events = 0
    with open(script_path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            event = json.loads(line)
            runtime.ingest(event["ts_ns"], event["payload"])
            n_events += 1
    if not runtime.finalized:
        end_ts = runtime.bus.time_range()[1] if runtime.bus.time_range() else 0
        runtime.finalize(end_ts)
    store = SessionStore(data_dir)
    store.persist(runtime.bus)
    errors = runtime.bus.read("reasoning.errors")
    prompts = runtime.bus.read("guidance")
    click.echo(f"recorded {session_id}: {n_events} events, "
               f"{len(prompts)} prompts, {len(errors)} errors")


@main.command()
@_data_dir_option
@click.option("--session-id", required=True)
@click.option("--verify/--no-verify", default=True, show_default=True,
              help="Compare the recomputed guidance against the recording.")
def replay(data_dir, session_id, verify):
    """Re-drive a recorded session's inputs and print the guidance transcript."""
    store = SessionStore(data_dir)
    loaded = store.load(session_id)
    tasks = load_task_dir(Path(data_dir) / "tasks")
    task = tasks.get(loaded.task_id)
    if task is None:
        raise click.ClickException(
            f"task {loaded.task_id!r} not found under {data_dir}/tasks")
    runtime = replay_inputs(loaded, task)
    replayed = runtime.guidance_transcript()
    for ts_ns, payload in replayed:
        click.echo(f"{ts_ns / 1e9:10.3f}s  {payload['kind']:>22}  {payload['text']}")
    if verify:
        recorded = [(e.ts_ns, e.payload) for e in loaded.read("guidance")]
        if recorded != replayed:
            raise click.ClickException(
                f"replay diverged: {len(recorded)} recorded vs {len(replayed)} replayed prompts")
        click.echo(f"verified: replay reproduced all {len(replayed)} prompts")


@main.command()
@_data_dir_option
@click.option("--session-id", required=True)
@click.option("--xml", "xml_path", default=None, type=click.Path(dir_okay=False),
              help="Also write the full XML document here.")
def analyze(data_dir, session_id, xml_path):
    """Summarize a recorded session."""
    store = SessionStore(data_dir)
    report = analyze_session(store.load(session_id))
    click.echo(f"session {report.session_id} (task {report.task_id}), "
               f"{report.duration_s:.1f}s")
    for seg in report.step_segments:
        click.echo(f"  step {seg.label:>6}  {seg.duration_s:8.1f}s")
    for cat, fraction in report.distribution.items():
        click.echo(f"  workload {cat:>10}  {fraction * 100:5.1f}%")
    for err in report.errors:
        click.echo(f"  error {err.get('kind', '?')}: {err.get('message', '')}")
    averages = [s["average"] for s in report.summaries.values()
                if s["average"] is not None]
    if averages:
        click.echo(f"  confidence over steps: {format_mean_std(averages)}")
    steps, categories, matrix = summary_matrix(
        report.step_segments, report.workload_segments)
    if steps and any(any(row) for row in matrix):
        click.echo("  step x workload seconds:")
        for sid, row in zip(steps, matrix):
            cells = "  ".join(f"{cat}={value:.1f}" for cat, value in zip(categories, row))
            click.echo(f"    {sid}: {cells}")
    if xml_path:
        Path(xml_path).write_text(report_to_xml(report))
        click.echo(f"  wrote {xml_path}")


@main.command("validate-task")
@click.argument("task_file", type=click.Path(exists=True, dir_okay=False))
def validate_task(task_file):
    """Check a task definition; exits non-zero when invalid."""
    text = Path(task_file).read_text()
    try:
        graph = parse_task_definition(text)
    except TaskDefinitionError as err:
        click.echo(f"INVALID: {task_file}")
        for violation in err.violations or [str(err)]:
            click.echo(f"  - {violation}")
        sys.exit(1)
    click.echo(f"OK: {graph.task_id} ({graph.name}), {len(graph.steps)} steps, "
               f"{len(graph.edges)} goal edges")


if __name__ == "__main__":
    main()
