"""Step tracking over a task graph, driven by object-state observations.

The tracker is a pure fold: `observe` takes an immutable state and one
object-state observation and returns the next state plus whatever it
inferred from the transition. Goals sit on edges, and satisfying the goal
on an edge counts as completion evidence for the edge's source step. The
current step only ever moves along graph edges; evidence for work deeper
in the graph drags it forward hop by hop instead of teleporting it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..task_model import GoalEdge, TaskGraph

OUT_OF_ORDER = "out_of_order"
MISSING_STEP = "missing_step"

# (from_step, to_step, object_class, state); identifies one goal edge.
EdgeKey = tuple[str, str, str, str]


def edge_key(edge: GoalEdge) -> EdgeKey:
    return (edge.from_step, edge.to_step, edge.goal.object_class, edge.goal.state)


@dataclass(frozen=True)
class ReasoningError:
    kind: str  # out_of_order | missing_step
    step_id: str
    ts_ns: int
    detail: str

    def to_payload(self) -> dict:
        return {"tag": "error_event", "kind": self.kind,
                "message": self.detail, "step_id": self.step_id}


@dataclass(frozen=True)
class ReasoningState:
    task: TaskGraph
    current_step_id: str
    satisfied: frozenset[EdgeKey]
    errors: tuple[ReasoningError, ...]
    history: tuple[tuple[int, str], ...]  # (ts_ns, step entered)
    done: bool = False

    def error_keys(self) -> frozenset[tuple[str, str]]:
        return frozenset((e.kind, e.step_id) for e in self.errors)

    def completed_steps(self) -> frozenset[str]:
        """Steps whose every outgoing goal has been observed.

        A terminal step has no outgoing goals, so it only completes when
        the session is finalized while it is current.
        """
        out = set()
        for step in self.task.steps:
            edges = self.task.outgoing_edges(step.step_id)
            if edges and all(edge_key(e) in self.satisfied for e in edges):
                out.add(step.step_id)
        if self.done and not self.task.outgoing_edges(self.current_step_id):
            out.add(self.current_step_id)
        return frozenset(out)


def init_session(task: TaskGraph) -> ReasoningState:
    starts = task.start_steps()
    if not starts:
        raise ValueError("task has no start step")
    first = min(starts, key=lambda sid: task.step(sid).index)
    return ReasoningState(task, first, frozenset(), (), ())


def _incoming_satisfied(task: TaskGraph, step_id: str, satisfied: frozenset[EdgeKey]) -> bool:
    return all(edge_key(e) in satisfied for e in task.incoming_edges(step_id))


def _outgoing_satisfied(task: TaskGraph, step_id: str, satisfied: frozenset[EdgeKey]) -> bool:
    edges = task.outgoing_edges(step_id)
    return bool(edges) and all(edge_key(e) in satisfied for e in edges)


def _forced_hop(task: TaskGraph, current: str, completed: set[str]) -> str | None:
    """First hop on a shortest path to the nearest completed strict descendant.

    Ties on distance break by display index of the descendant, then by
    display index of the first hop, keeping cascades deterministic.
    """
    frontier = [current]
    parents: dict[str, str] = {current: current}
    depth = {current: 0}
    best: tuple[int, int, str] | None = None
    while frontier:
        nxt_frontier = []
        for node in frontier:
            for succ in task.successors(node):
                if succ in parents:
                    continue
                parents[succ] = node
                depth[succ] = depth[node] + 1
                nxt_frontier.append(succ)
                if succ in completed:
                    cand = (depth[succ], task.step(succ).index, succ)
                    if best is None or cand < best:
                        best = cand
        if best is not None:
            break  # BFS: anything found on this level is nearest
        frontier = nxt_frontier
    if best is None:
        return None
    node = best[2]
    while parents[node] != current:
        node = parents[node]
    return node


def observe(state: ReasoningState, ts_ns: int, object_class: str,
            obj_state: str) -> tuple[ReasoningState, tuple[str, ...], tuple[ReasoningError, ...]]:
    """Fold one object-state observation into the tracker.

    Returns (next_state, step ids the current step advanced through in
    order, errors raised by this observation). Errors are deduplicated by
    (kind, step_id) across the whole session.
    """
    if state.done:
        raise ValueError("session already finalized")
    task = state.task
    matched = [e for e in task.edges
               if e.goal.object_class == object_class and e.goal.state == obj_state
               and edge_key(e) not in state.satisfied]
    if not matched:
        return state, (), ()

    satisfied = state.satisfied | {edge_key(e) for e in matched}
    new_errors: list[ReasoningError] = []
    seen = set(state.error_keys())

    def raise_error(kind: str, step_id: str, detail: str):
        if (kind, step_id) not in seen:
            seen.add((kind, step_id))
            new_errors.append(ReasoningError(kind, step_id, ts_ns, detail))

    # Evidence for a step whose own prerequisites were never met.
    for e in matched:
        src = e.from_step
        if task.incoming_edges(src) and not _incoming_satisfied(task, src, satisfied):
            raise_error(OUT_OF_ORDER, src,
                        f"evidence for step {src} arrived before its prerequisites were met")

    completed = {s.step_id for s in task.steps
                 if _outgoing_satisfied(task, s.step_id, satisfied)}
    current = state.current_step_id
    advanced: list[str] = []
    history = list(state.history)
    while True:
        nxt = None
        for succ in task.successors(current):
            if _incoming_satisfied(task, succ, satisfied):
                nxt = succ
                break
        if nxt is None:
            nxt = _forced_hop(task, current, completed - {current})
        if nxt is None:
            break
        # Leaving a step that has completion evidence but whose own
        # prerequisites were never observed means something was skipped.
        if _outgoing_satisfied(task, current, satisfied):
            for e in task.incoming_edges(current):
                if edge_key(e) not in satisfied:
                    raise_error(MISSING_STEP, e.from_step,
                                f"no evidence that step {e.from_step} was performed")
        advanced.append(nxt)
        history.append((ts_ns, nxt))
        current = nxt

    next_state = replace(state, satisfied=satisfied, current_step_id=current,
                         errors=state.errors + tuple(new_errors),
                         history=tuple(history))
    return next_state, tuple(advanced), tuple(new_errors)


def finalize(state: ReasoningState) -> ReasoningState:
    """Close the session; completes the current step if it is terminal."""
    if state.done:
        raise ValueError("session already finalized")
    return replace(state, done=True)


def detect_errors(task: TaskGraph,
                  events: list[tuple[int, str, str]]) -> tuple[ReasoningError, ...]:
    """Fold a scripted (ts_ns, object_class, state) sequence; all errors."""
    st = init_session(task)
    for ts_ns, object_class, obj_state in events:
        st, _, _ = observe(st, ts_ns, object_class, obj_state)
    return st.errors
