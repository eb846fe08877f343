"""Task definitions as dependency graphs.

Steps are nodes; directed edges carry object-state goals. All goals on the
edges between the current step and a successor must be achieved before the
transition counts as taken (parallel edges are conjunctive).
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field


class TaskDefinitionError(ValueError):
    """Raised when a task definition cannot be parsed into a valid graph."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or []


@dataclass(frozen=True)
class ObjectStateGoal:
    object_class: str
    state: str


@dataclass(frozen=True)
class GoalEdge:
    from_step: str
    to_step: str
    goal: ObjectStateGoal


@dataclass(frozen=True)
class Step:
    step_id: str
    instruction: str
    required_objects: tuple[str, ...]
    index: int  # 1-based display position, topological
    expected_duration_s: float | None = None


@dataclass(frozen=True)
class ObjectVocab:
    object_class: str
    states: tuple[str, ...]


@dataclass(frozen=True)
class TaskGraph:
    task_id: str
    name: str
    objects: tuple[ObjectVocab, ...]
    steps: tuple[Step, ...]
    edges: tuple[GoalEdge, ...]
    _by_id: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {s.step_id: s for s in self.steps})

    def step(self, step_id: str) -> Step:
        return self._by_id[step_id]

    def has_step(self, step_id: str) -> bool:
        return step_id in self._by_id

    def successors(self, step_id: str) -> tuple[str, ...]:
        seen: list[str] = []
        for e in self.edges:
            if e.from_step == step_id and e.to_step not in seen:
                seen.append(e.to_step)
        return tuple(sorted(seen, key=lambda s: self._by_id[s].index if s in self._by_id else 0))

    def predecessors(self, step_id: str) -> tuple[str, ...]:
        seen: list[str] = []
        for e in self.edges:
            if e.to_step == step_id and e.from_step not in seen:
                seen.append(e.from_step)
        return tuple(seen)

    def edges_between(self, from_step: str, to_step: str) -> tuple[GoalEdge, ...]:
        return tuple(e for e in self.edges if e.from_step == from_step and e.to_step == to_step)

    def incoming_edges(self, step_id: str) -> tuple[GoalEdge, ...]:
        return tuple(e for e in self.edges if e.to_step == step_id)

    def outgoing_edges(self, step_id: str) -> tuple[GoalEdge, ...]:
        return tuple(e for e in self.edges if e.from_step == step_id)

    def start_steps(self) -> tuple[str, ...]:
        with_incoming = {e.to_step for e in self.edges}
        return tuple(s.step_id for s in self.steps if s.step_id not in with_incoming)

    def terminal_steps(self) -> tuple[str, ...]:
        with_outgoing = {e.from_step for e in self.edges}
        return tuple(s.step_id for s in self.steps if s.step_id not in with_outgoing)

    def vocabulary_pairs(self) -> frozenset[ObjectStateGoal]:
        pairs = set()
        for ov in self.objects:
            for st in ov.states:
                pairs.add(ObjectStateGoal(ov.object_class, st))
        return frozenset(pairs)

    def steps_by_index(self) -> tuple[Step, ...]:
        return tuple(sorted(self.steps, key=lambda s: s.index))


# --- parsing ---------------------------------------------------------------

_TOP_FIELDS = {"task_id", "name", "objects", "steps", "edges"}
_OBJECT_FIELDS = {"class", "states"}
_STEP_FIELDS = {"id", "instruction", "required_objects", "expected_duration_s"}
_EDGE_FIELDS = {"from", "to", "goal"}
_GOAL_FIELDS = {"class", "state"}


def _require_str(value, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise TaskDefinitionError(f"{where} must be a non-empty string, got {value!r}")
    return value


def _check_fields(obj, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise TaskDefinitionError(f"{where} must be a JSON object, got {type(obj).__name__}")
    unknown = set(obj) - allowed
    if unknown:
        raise TaskDefinitionError(f"{where} has unknown field(s): {', '.join(sorted(unknown))}")
    missing = required - set(obj)
    if missing:
        raise TaskDefinitionError(f"{where} missing required field(s): {', '.join(sorted(missing))}")


def parse_task_definition(text: str) -> TaskGraph:
    """Parse a task definition document into a validated TaskGraph.

    Every malformed input raises TaskDefinitionError naming the offending
    element (parsing is total: no exception type other than this one).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TaskDefinitionError(
            f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"
        ) from None

    _check_fields(doc, _TOP_FIELDS, _TOP_FIELDS, "task definition")
    task_id = _require_str(doc["task_id"], "task_id")
    name = _require_str(doc["name"], "name")

    if not isinstance(doc["objects"], list):
        raise TaskDefinitionError("objects must be a list")
    objects: list[ObjectVocab] = []
    for i, o in enumerate(doc["objects"]):
        _check_fields(o, _OBJECT_FIELDS, _OBJECT_FIELDS, f"objects[{i}]")
        cls = _require_str(o["class"], f"objects[{i}].class")
        if not isinstance(o["states"], list) or not o["states"]:
            raise TaskDefinitionError(f"objects[{i}].states must be a non-empty list")
        states = tuple(_require_str(s, f"objects[{i}].states entry") for s in o["states"])
        if len(set(states)) != len(states):
            raise TaskDefinitionError(f"objects[{i}] ({cls}) repeats a state")
        objects.append(ObjectVocab(cls, states))
    if len({o.object_class for o in objects}) != len(objects):
        raise TaskDefinitionError("duplicate object class in objects")

    if not isinstance(doc["steps"], list) or not doc["steps"]:
        raise TaskDefinitionError("steps must be a non-empty list")
    raw_steps: list[dict] = []
    for i, s in enumerate(doc["steps"]):
        _check_fields(s, _STEP_FIELDS, {"id", "instruction", "required_objects"}, f"steps[{i}]")
        sid = _require_str(s["id"], f"steps[{i}].id")
        instruction = _require_str(s["instruction"], f"steps[{i}].instruction")
        if not isinstance(s["required_objects"], list):
            raise TaskDefinitionError(f"steps[{i}].required_objects must be a list")
        req = tuple(_require_str(r, f"steps[{i}].required_objects entry") for r in s["required_objects"])
        dur = s.get("expected_duration_s")
        if dur is not None and (not isinstance(dur, (int, float)) or isinstance(dur, bool) or dur <= 0):
            raise TaskDefinitionError(f"steps[{i}].expected_duration_s must be a positive number")
        raw_steps.append({"id": sid, "instruction": instruction, "required_objects": req,
                          "expected_duration_s": None if dur is None else float(dur)})

    if not isinstance(doc["edges"], list):
        raise TaskDefinitionError("edges must be a list")
    edges: list[GoalEdge] = []
    for i, e in enumerate(doc["edges"]):
        _check_fields(e, _EDGE_FIELDS, _EDGE_FIELDS, f"edges[{i}]")
        frm = _require_str(e["from"], f"edges[{i}].from")
        to = _require_str(e["to"], f"edges[{i}].to")
        _check_fields(e["goal"], _GOAL_FIELDS, _GOAL_FIELDS, f"edges[{i}].goal")
        goal = ObjectStateGoal(_require_str(e["goal"]["class"], f"edges[{i}].goal.class"),
                               _require_str(e["goal"]["state"], f"edges[{i}].goal.state"))
        edges.append(GoalEdge(frm, to, goal))

    ids = [s["id"] for s in raw_steps]
    indexes = assign_display_indexes(ids, [(e.from_step, e.to_step) for e in edges])
    steps = tuple(
        Step(s["id"], s["instruction"], s["required_objects"],
             indexes.get(s["id"], pos + 1), s["expected_duration_s"])
        for pos, s in enumerate(raw_steps)
    )
    # Store steps in display order so serialization round-trips to an equal graph.
    steps = tuple(sorted(steps, key=lambda s: s.index))
    graph = TaskGraph(task_id, name, tuple(objects), steps, tuple(edges))
    violations = validate_graph(graph)
    if violations:
        raise TaskDefinitionError(
            "task definition is invalid: " + "; ".join(violations), violations
        )
    return graph


def assign_display_indexes(step_ids: list[str], arcs: list[tuple[str, str]]) -> dict[str, int]:
    """1-based topological positions; ties broken by declaration order.

    Returns an empty mapping when no topological order exists.
    """
    pos = {sid: i for i, sid in enumerate(step_ids)}
    indeg = {sid: 0 for sid in step_ids}
    out: dict[str, list[str]] = {sid: [] for sid in step_ids}
    for frm, to in arcs:
        if frm in indeg and to in indeg:
            indeg[to] += 1
            out[frm].append(to)
    heap = [pos[sid] for sid in step_ids if indeg[sid] == 0]
    heapq.heapify(heap)
    order: list[str] = []
    ids_by_pos = list(step_ids)
    while heap:
        sid = ids_by_pos[heapq.heappop(heap)]
        order.append(sid)
        for nxt in out[sid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, pos[nxt])
    if len(order) != len(step_ids):
        return {}
    return {sid: i + 1 for i, sid in enumerate(order)}


# --- validation ------------------------------------------------------------

def _find_cycle(step_ids: list[str], arcs: list[tuple[str, str]]) -> list[tuple[str, str]] | None:
    """One representative cycle as a list of its arcs, or None."""
    out: dict[str, list[str]] = {sid: [] for sid in step_ids}
    for frm, to in arcs:
        if frm in out and to in out:
            out[frm].append(to)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {sid: WHITE for sid in step_ids}
    parent: dict[str, str] = {}
    for root in step_ids:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(out[root]))]
        color[root] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == GRAY:
                    # back edge: walk parents from node up to nxt
                    path = [node]
                    while path[-1] != nxt:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return [(path[i], path[i + 1]) for i in range(len(path) - 1)] + [(node, nxt)]
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    parent[nxt] = node
                    stack.append((nxt, iter(out[nxt])))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return None


def validate_graph(graph: TaskGraph) -> list[str]:
    """Structural validation; returns a list of violations, empty when valid."""
    violations: list[str] = []
    ids = [s.step_id for s in graph.steps]
    seen: set[str] = set()
    for sid in ids:
        if sid in seen:
            violations.append(f"duplicate step id {sid}")
        seen.add(sid)
    for s in graph.steps:
        if not s.instruction:
            violations.append(f"empty instruction at {s.step_id}")

    declared = {o.object_class for o in graph.objects}
    vocab = graph.vocabulary_pairs()
    for s in graph.steps:
        for r in s.required_objects:
            if r not in declared:
                violations.append(f"step {s.step_id} requires undeclared object {r}")

    known = set(ids)
    self_loop_at: set[str] = set()
    clean_arcs: list[tuple[str, str]] = []
    for e in graph.edges:
        for endpoint in (e.from_step, e.to_step):
            if endpoint not in known:
                violations.append(f"edge {e.from_step}->{e.to_step} references unknown step {endpoint}")
        if e.from_step == e.to_step:
            if e.from_step not in self_loop_at:
                violations.append(f"self-loop at {e.from_step}")
                self_loop_at.add(e.from_step)
        elif e.from_step in known and e.to_step in known:
            clean_arcs.append((e.from_step, e.to_step))
        if e.goal not in vocab:
            violations.append(
                f"edge {e.from_step}->{e.to_step} goal ({e.goal.object_class}, {e.goal.state})"
                " not in object vocabulary"
            )

    cycle = _find_cycle(ids, clean_arcs)
    if cycle:
        violations.append("cycle: " + ", ".join(f"{a}->{b}" for a, b in cycle))

    if not graph.start_steps():
        violations.append("no start step (every step has an incoming edge)")
    if not graph.terminal_steps():
        violations.append("no terminal step (every step has an outgoing edge)")

    # Display indexes are checked only when a topological order exists.
    if cycle is None and not self_loop_at and len(seen) == len(ids):
        by_declared = sorted(graph.steps, key=lambda s: s.index)
        expected = assign_display_indexes([s.step_id for s in by_declared],
                                          [(e.from_step, e.to_step) for e in graph.edges
                                           if e.from_step in known and e.to_step in known])
        if expected:
            for s in graph.steps:
                if expected[s.step_id] != s.index:
                    violations.append(
                        f"step {s.step_id} display index {s.index}"
                        f" does not match topological position {expected[s.step_id]}"
                    )
    return violations


# --- serialization ---------------------------------------------------------

def serialize_task_definition(graph: TaskGraph) -> str:
    """Canonical document for a graph; parse(serialize(g)) == g."""
    doc = {
        "task_id": graph.task_id,
        "name": graph.name,
        "objects": [{"class": o.object_class, "states": list(o.states)} for o in graph.objects],
        "steps": [
            {
                "id": s.step_id,
                "instruction": s.instruction,
                "required_objects": list(s.required_objects),
                **({"expected_duration_s": s.expected_duration_s}
                   if s.expected_duration_s is not None else {}),
            }
            for s in graph.steps_by_index()
        ],
        "edges": [
            {"from": e.from_step, "to": e.to_step,
             "goal": {"class": e.goal.object_class, "state": e.goal.state}}
            for e in graph.edges
        ],
    }
    return json.dumps(doc, indent=2)


def load_task_file(path) -> TaskGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_task_definition(fh.read())
