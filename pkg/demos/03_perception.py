"""Window frame features, fuse image regions, train the step model, label states.

Run from the repository root:

    python3 demos/03_perception.py
"""

import numpy as np

from tim.perception import (
    FrameFeatures,
    FusionConfig,
    ObjectStateExample,
    assemble_windows,
    classify_object_state,
    feature,
    fuse_features,
    fusion_weights,
    gru_backward,
    gru_forward,
    init_gru_weights,
    sgd_step,
)

SEC = 1_000_000_000


def windowing():
    rng = np.random.default_rng(7)
    frames = [
        FrameFeatures(
            ts_ns=int(t * 0.5 * SEC),
            action=feature(rng.normal(size=4), "action"),
            global_image=feature(rng.normal(size=6), "global"),
            regions=(feature(rng.normal(size=6), "region"),),
        )
        for t in range(13)  # 0.0s .. 6.0s at 2 Hz
    ]
    windows = assemble_windows(frames, k_seconds=2.0)
    print(f"{len(frames)} frames over 6s tile into {len(windows)} windows of 2s:")
    for w in windows:
        print(f"  [{w.t_start_ns / SEC:.1f}s, {w.t_end_ns / SEC:.1f}s) "
              f"action mean {w.action.values.mean():+.3f}")
    print()


def fusion():
    rng = np.random.default_rng(11)
    cfg = FusionConfig(
        fusion_dim=8,
        temperature=0.5,
        projection_global=rng.normal(size=(8, 6)),
        projection_region=rng.normal(size=(8, 6)),
    )
    global_vec = feature(rng.normal(size=6), "global")
    # first region is nearly the global view, second is unrelated
    near = feature(global_vec.values + rng.normal(scale=0.05, size=6), "region")
    far = feature(rng.normal(size=6), "region")
    weights = fusion_weights(global_vec, [near, far], cfg)
    fused = fuse_features(global_vec, [near, far], cfg)
    print("fusion weights [global, near-region, far-region]: "
          + ", ".join(f"{w:.3f}" for w in weights))
    print(f"fused feature lives in the {fused.values.shape[0]}-dim fusion space")
    print()


def step_model():
    rng = np.random.default_rng(3)
    n_steps = 3

    def sequence(T=12):
        labels = np.sort(rng.integers(0, n_steps, size=T))  # steps only advance
        x = np.eye(n_steps)[labels] + rng.normal(scale=0.2, size=(T, n_steps))
        return x, labels

    train = [sequence() for _ in range(20)]
    w = init_gru_weights(input_dim=n_steps, hidden_dim=8, n_steps=n_steps,
                         rng=rng, scale=0.3)
    h0 = np.zeros(8)
    for epoch in range(120):
        total = 0.0
        for x, labels in train:
            loss, grads = gru_backward(x, h0, w, labels)
            w = sgd_step(w, grads, lr=0.15)
            total += loss
        if epoch % 30 == 0 or epoch == 119:
            print(f"epoch {epoch:3d}  mean sequence loss {total / len(train):.4f}")

    x, labels = sequence()
    probs = gru_forward(x, h0, w)
    accuracy = float(np.mean(np.argmax(probs, axis=1) == labels))
    print(f"held-out frame accuracy after training: {accuracy:.2f}")
    print()


def object_states():
    rng = np.random.default_rng(19)
    anchors = {
        ("jar", "closed"): [3.0, 0.0, 0.0, 0.0],
        ("jar", "open"): [0.0, 3.0, 0.0, 0.0],
        ("tortilla", "plain"): [0.0, 0.0, 3.0, 0.0],
        ("tortilla", "folded"): [0.0, 0.0, 0.0, 3.0],
    }
    examples = [
        ObjectStateExample(np.asarray(center) + rng.normal(scale=0.3, size=4),
                           object_class, state)
        for (object_class, state), center in anchors.items()
        for _ in range(25)
    ]
    query = np.asarray([0.1, 2.8, 0.2, 0.0]) + rng.normal(scale=0.1, size=4)
    state, score = classify_object_state(examples, query, k=5, object_class="jar")
    print(f"an embedding near the open-jar cluster classifies as "
          f"{state!r} (score {score:.2f})")
    state, score = classify_object_state(examples, query, k=5,
                                         object_class="tortilla")
    print(f"restricted to tortilla examples the same query lands on "
          f"{state!r} (score {score:.2f})")


def main():
    windowing()
    fusion()
    step_model()
    object_states()


if __name__ == "__main__":
    main()
