"""Track task progress from object-state events, flag skips, train the step
classifier.

Run from the repository root:

    python3 demos/05_reasoning.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from tim.reasoning import (
    RandomForest,
    encode_observations,
    finalize,
    init_session,
    load_forest,
    observe,
    save_forest,
)
from tim.task_model import parse_task_definition

SEC = 1_000_000_000

SANDWICH = {
    "task_id": "sandwich",
    "name": "Cheese Sandwich",
    "objects": [
        {"class": "bread", "states": ["bagged", "on-plate", "buttered",
                                      "with-cheese", "assembled"]},
        {"class": "cheese", "states": ["wrapped", "sliced"]},
    ],
    "steps": [
        {"id": "s1", "instruction": "Put two slices of bread on the plate",
         "required_objects": ["bread"]},
        {"id": "s2", "instruction": "Butter both slices",
         "required_objects": ["bread"]},
        {"id": "s3", "instruction": "Slice the cheese",
         "required_objects": ["cheese"]},
        {"id": "s4", "instruction": "Lay cheese on one slice",
         "required_objects": ["bread", "cheese"]},
        {"id": "s5", "instruction": "Close the sandwich",
         "required_objects": ["bread"]},
    ],
    "edges": [
        {"from": "s1", "to": "s2", "goal": {"class": "bread", "state": "on-plate"}},
        {"from": "s2", "to": "s3", "goal": {"class": "bread", "state": "buttered"}},
        {"from": "s3", "to": "s4", "goal": {"class": "cheese", "state": "sliced"}},
        {"from": "s4", "to": "s5", "goal": {"class": "bread", "state": "with-cheese"}},
    ],
}


def progress_tracking(task):
    print("a run that skips the buttering step:")
    st = init_session(task)
    print(f"  start at {st.current_step_id}")
    script = [
        (10, "bread", "on-plate"),
        (25, "cheese", "sliced"),   # s2's goal never observed
        (40, "bread", "with-cheese"),
    ]
    for ts_s, object_class, obj_state in script:
        st, advanced, errors = observe(st, ts_s * SEC, object_class, obj_state)
        hops = " -> ".join(advanced) if advanced else "no advance"
        print(f"  t={ts_s:2d}s  {object_class}={obj_state!r:<14} {hops}, "
              f"now at {st.current_step_id}")
        for err in errors:
            print(f"        ! {err.kind}: step {err.step_id}")
    st = finalize(st)
    print(f"  finalized with {len(st.errors)} errors on record")
    print()


def step_classifier(task):
    rng = np.random.default_rng(5)
    stages = ["on-plate", "buttered", "sliced", "with-cheese"]
    goal_for = {1: None, 2: ("bread", "on-plate"), 3: ("bread", "buttered"),
                4: ("cheese", "sliced"), 5: ("bread", "with-cheese")}

    def sample(step_idx):
        observed = set()
        for i in range(2, step_idx + 1):
            observed.add(goal_for[i])
        last = {}
        if rng.random() < 0.6:
            cls = rng.choice(["bread", "cheese"])
            last[cls] = (rng.choice(["left", "right", "both"]),
                         rng.choice(["direct", "indirect"]))
        return encode_observations(task, observed, last)

    X, y = [], []
    for step_idx in range(1, 6):
        for _ in range(50):
            X.append(sample(step_idx))
            y.append(f"s{step_idx}")
    X = np.asarray(X)

    forest = RandomForest(n_trees=30, max_depth=10, seed=9).fit(X, y)
    preds = forest.predict(X)
    print(f"step classifier fit on {len(y)} stage snapshots, "
          f"training accuracy {np.mean([p == t for p, t in zip(preds, y)]):.2f}")

    observed = {("bread", "on-plate"), ("bread", "buttered")}
    query = encode_observations(task, observed, {"cheese": ("right", "direct")})
    probs = forest.predict_proba(np.asarray([query]))[0]
    ranked = sorted(zip(forest.classes_, probs), key=lambda kv: -kv[1])
    print("bread is buttered and the right hand holds the cheese; the forest says:")
    for label, p in ranked[:3]:
        print(f"  {label}: {p:.2f}")

    with tempfile.TemporaryDirectory() as root:
        path = Path(root) / "steps.forest.json"
        save_forest(forest, path)
        restored = load_forest(path)
        same = np.array_equal(restored.predict_proba(X), forest.predict_proba(X))
        print(f"forest survives a save/load round-trip: {same}")


def main():
    task = parse_task_definition(json.dumps(SANDWICH))
    progress_tracking(task)
    step_classifier(task)


if __name__ == "__main__":
    main()
