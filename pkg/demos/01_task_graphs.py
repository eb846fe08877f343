"""Define a task, parse it, walk the graph, and see validation catch a cycle.

Run from the repository root:

    python3 demos/01_task_graphs.py
"""

import json

from tim.task_model import (
    TaskDefinitionError,
    parse_task_definition,
    serialize_task_definition,
)

QUESADILLA = {
    "task_id": "quesadilla",
    "name": "Nut Butter Quesadilla",
    "objects": [
        {"class": "tortilla", "states": ["plain", "on-board", "with-nut-butter",
                                         "with-jelly", "folded", "cut-in-half",
                                         "plated"]},
        {"class": "knife", "states": ["clean", "with-nut-butter", "with-jelly"]},
        {"class": "nut-butter-jar", "states": ["closed", "open"]},
        {"class": "jelly-jar", "states": ["closed", "open"]},
        {"class": "cutting-board", "states": ["clear", "in-use"]},
        {"class": "plate", "states": ["empty", "served"]},
    ],
    "steps": [
        {"id": "s1", "instruction": "Place a tortilla on the cutting board",
         "required_objects": ["tortilla", "cutting-board"], "expected_duration_s": 10},
        {"id": "s2", "instruction": "Scoop nut butter with the knife",
         "required_objects": ["knife", "nut-butter-jar"], "expected_duration_s": 15},
        {"id": "s3", "instruction": "Spread the nut butter over the tortilla",
         "required_objects": ["knife", "tortilla"], "expected_duration_s": 20},
        {"id": "s4", "instruction": "Spread jelly on top of the nut butter",
         "required_objects": ["knife", "jelly-jar", "tortilla"],
         "expected_duration_s": 20},
        {"id": "s5", "instruction": "Fold the tortilla in half",
         "required_objects": ["tortilla"], "expected_duration_s": 8},
        {"id": "s6", "instruction": "Cut the folded tortilla into two halves",
         "required_objects": ["knife", "tortilla"], "expected_duration_s": 12},
        {"id": "s7", "instruction": "Slide the halves onto the plate",
         "required_objects": ["tortilla", "plate"], "expected_duration_s": 10},
    ],
    "edges": [
        {"from": "s1", "to": "s2", "goal": {"class": "tortilla", "state": "on-board"}},
        {"from": "s2", "to": "s3", "goal": {"class": "knife",
                                            "state": "with-nut-butter"}},
        {"from": "s3", "to": "s4", "goal": {"class": "tortilla",
                                            "state": "with-nut-butter"}},
        {"from": "s4", "to": "s5", "goal": {"class": "tortilla",
                                            "state": "with-jelly"}},
        {"from": "s5", "to": "s6", "goal": {"class": "tortilla", "state": "folded"}},
        {"from": "s6", "to": "s7", "goal": {"class": "tortilla",
                                            "state": "cut-in-half"}},
    ],
}


def main():
    task = parse_task_definition(json.dumps(QUESADILLA))
    print(f"parsed {task.task_id!r} ({task.name}): "
          f"{len(task.steps)} steps, {len(task.edges)} goal edges")
    print(f"start steps:    {', '.join(task.start_steps())}")
    print(f"terminal steps: {', '.join(task.terminal_steps())}")
    print()

    print("steps in display order:")
    for step in task.steps_by_index():
        nxt = task.successors(step.step_id)
        arrow = f" -> {', '.join(nxt)}" if nxt else "  (done)"
        print(f"  {step.index}. [{step.step_id}] {step.instruction}{arrow}")
    print()

    print("what advances each step:")
    for edge in task.edges:
        print(f"  {edge.from_step} -> {edge.to_step} once "
              f"{edge.goal.object_class} reaches {edge.goal.state!r}")
    print()

    round_trip = parse_task_definition(serialize_task_definition(task))
    print(f"serialize/parse round-trip preserves the graph: "
          f"{round_trip == task}")
    print()

    broken = dict(QUESADILLA)
    broken["edges"] = QUESADILLA["edges"] + [
        {"from": "s7", "to": "s1", "goal": {"class": "plate", "state": "served"}}]
    try:
        parse_task_definition(json.dumps(broken))
    except TaskDefinitionError as err:
        print("adding a s7 -> s1 edge is rejected:")
        for violation in err.violations:
            print(f"  - {violation}")


if __name__ == "__main__":
    main()
