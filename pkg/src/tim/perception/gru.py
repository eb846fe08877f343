"""Gated recurrent step classifier, forward and backward passes from scratch.

Gate convention (locked; tests and the finite-difference oracle depend on it):

    z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)         update gate
    r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)         reset gate
    hcand_t = tanh(W_h x_t + U_h (r_t * h_{t-1}) + b_h)
    h_t = (1 - z_t) * h_{t-1} + z_t * hcand_t

Per-timestep class scores are W_out h_t + b_out, softmaxed into step
probabilities. The training loss is the mean cross-entropy over timesteps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

_PARAMS = ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h", "W_out", "b_out")


@dataclass(eq=False)
class GruWeights:
    input_dim: int
    hidden_dim: int
    n_steps: int
    W_z: np.ndarray
    U_z: np.ndarray
    b_z: np.ndarray
    W_r: np.ndarray
    U_r: np.ndarray
    b_r: np.ndarray
    W_h: np.ndarray
    U_h: np.ndarray
    b_h: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray

    def __post_init__(self):
        d, h, n = self.input_dim, self.hidden_dim, self.n_steps
        expect = {
            "W_z": (h, d), "U_z": (h, h), "b_z": (h,),
            "W_r": (h, d), "U_r": (h, h), "b_r": (h,),
            "W_h": (h, d), "U_h": (h, h), "b_h": (h,),
            "W_out": (n, h), "b_out": (n,),
        }
        for name, shape in expect.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            setattr(self, name, arr)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")


def init_gru_weights(input_dim: int, hidden_dim: int, n_steps: int,
                     rng: np.random.Generator, scale: float = 0.4) -> GruWeights:
    def m(r, c):
        return rng.normal(0.0, scale, size=(r, c))

    return GruWeights(
        input_dim, hidden_dim, n_steps,
        W_z=m(hidden_dim, input_dim), U_z=m(hidden_dim, hidden_dim), b_z=np.zeros(hidden_dim),
        W_r=m(hidden_dim, input_dim), U_r=m(hidden_dim, hidden_dim), b_r=np.zeros(hidden_dim),
        W_h=m(hidden_dim, input_dim), U_h=m(hidden_dim, hidden_dim), b_h=np.zeros(hidden_dim),
        W_out=m(n_steps, hidden_dim), b_out=np.zeros(n_steps),
    )


def zero_gru_weights(input_dim: int, hidden_dim: int, n_steps: int) -> GruWeights:
    rng = np.random.default_rng(0)
    w = init_gru_weights(input_dim, hidden_dim, n_steps, rng, scale=0.0)
    return w


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # stable for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _check_inputs(x_seq: np.ndarray, h0: np.ndarray, w: GruWeights) -> tuple[np.ndarray, np.ndarray]:
    x_seq = np.asarray(x_seq, dtype=np.float64)
    h0 = np.asarray(h0, dtype=np.float64)
    if x_seq.ndim != 2 or x_seq.shape[1] != w.input_dim:
        raise ValueError(f"x_seq must be (T, {w.input_dim}), got {x_seq.shape}")
    if h0.shape != (w.hidden_dim,):
        raise ValueError(f"h0 must have shape ({w.hidden_dim},), got {h0.shape}")
    if x_seq.size and not np.all(np.isfinite(x_seq)):
        raise ValueError("x_seq contains non-finite values")
    if not np.all(np.isfinite(h0)):
        raise ValueError("h0 contains non-finite values")
    return x_seq, h0


def _forward(x_seq: np.ndarray, h0: np.ndarray, w: GruWeights):
    T = x_seq.shape[0]
    H = w.hidden_dim
    z = np.zeros((T, H))
    r = np.zeros((T, H))
    hcand = np.zeros((T, H))
    h = np.zeros((T + 1, H))
    h[0] = h0
    for t in range(T):
        x = x_seq[t]
        z[t] = _sigmoid(w.W_z @ x + w.U_z @ h[t] + w.b_z)
        r[t] = _sigmoid(w.W_r @ x + w.U_r @ h[t] + w.b_r)
        hcand[t] = np.tanh(w.W_h @ x + w.U_h @ (r[t] * h[t]) + w.b_h)
        h[t + 1] = (1.0 - z[t]) * h[t] + z[t] * hcand[t]
    scores = h[1:] @ w.W_out.T + w.b_out
    probs = _softmax_rows(scores) if T else np.zeros((0, w.n_steps))
    return probs, z, r, hcand, h


def gru_forward(x_seq, h0, w: GruWeights) -> np.ndarray:
    """Per-timestep step probabilities, shape (T, n_steps); rows sum to 1."""
    x_seq, h0 = _check_inputs(x_seq, h0, w)
    probs, *_ = _forward(x_seq, h0, w)
    return probs


def _check_targets(targets, T: int, n_steps: int) -> np.ndarray:
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (T,):
        raise ValueError(f"targets must have shape ({T},), got {targets.shape}")
    if T and (targets.min() < 0 or targets.max() >= n_steps):
        raise ValueError("target indices out of range")
    return targets


def gru_loss(x_seq, h0, w: GruWeights, targets) -> float:
    """Mean cross-entropy of the target step over timesteps; 0.0 for T=0."""
    x_seq, h0 = _check_inputs(x_seq, h0, w)
    T = x_seq.shape[0]
    targets = _check_targets(targets, T, w.n_steps)
    if T == 0:
        return 0.0
    probs = gru_forward(x_seq, h0, w)
    picked = probs[np.arange(T), targets]
    return float(-np.mean(np.log(picked)))


def gru_backward(x_seq, h0, w: GruWeights, targets) -> tuple[float, dict[str, np.ndarray]]:
    """Backpropagation through time for the mean cross-entropy loss.

    Returns (loss, gradients keyed like the weight fields). A zero-length
    sequence yields loss 0 and all-zero gradients.
    """
    x_seq, h0 = _check_inputs(x_seq, h0, w)
    T = x_seq.shape[0]
    targets = _check_targets(targets, T, w.n_steps)
    grads = {name: np.zeros_like(getattr(w, name)) for name in _PARAMS}
    if T == 0:
        return 0.0, grads

    probs, z, r, hcand, h = _forward(x_seq, h0, w)
    picked = probs[np.arange(T), targets]
    loss = float(-np.mean(np.log(picked)))

    # d(mean CE)/d(scores_t) = (probs_t - onehot(y_t)) / T
    dscores = probs.copy()
    dscores[np.arange(T), targets] -= 1.0
    dscores /= T

    dh_next = np.zeros(w.hidden_dim)  # dL/dh_t flowing from t+1
    for t in range(T - 1, -1, -1):
        g = dh_next + w.W_out.T @ dscores[t]
        grads["W_out"] += np.outer(dscores[t], h[t + 1])
        grads["b_out"] += dscores[t]

        dz = g * (hcand[t] - h[t])
        dhcand = g * z[t]
        da_h = dhcand * (1.0 - hcand[t] ** 2)
        da_z = dz * z[t] * (1.0 - z[t])

        rh = r[t] * h[t]
        grads["W_h"] += np.outer(da_h, x_seq[t])
        grads["U_h"] += np.outer(da_h, rh)
        grads["b_h"] += da_h

        drh = w.U_h.T @ da_h
        dr = drh * h[t]
        da_r = dr * r[t] * (1.0 - r[t])
        grads["W_r"] += np.outer(da_r, x_seq[t])
        grads["U_r"] += np.outer(da_r, h[t])
        grads["b_r"] += da_r

        grads["W_z"] += np.outer(da_z, x_seq[t])
        grads["U_z"] += np.outer(da_z, h[t])
        grads["b_z"] += da_z

        dh_next = (g * (1.0 - z[t])
                   + drh * r[t]
                   + w.U_z.T @ da_z
                   + w.U_r.T @ da_r)
    return loss, grads


def sgd_step(w: GruWeights, grads: dict[str, np.ndarray], lr: float) -> GruWeights:
    updated = {name: getattr(w, name) - lr * grads[name] for name in _PARAMS}
    return GruWeights(w.input_dim, w.hidden_dim, w.n_steps, **updated)


# --- weight files -----------------------------------------------------------

def save_gru_weights(w: GruWeights, path) -> None:
    doc = {"input_dim": w.input_dim, "hidden_dim": w.hidden_dim, "n_steps": w.n_steps}
    for name in _PARAMS:
        doc[name] = getattr(w, name).tolist()  # row-major nested lists
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def load_gru_weights(path) -> GruWeights:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    kwargs = {name: np.asarray(doc[name], dtype=np.float64) for name in _PARAMS}
    return GruWeights(doc["input_dim"], doc["hidden_dim"], doc["n_steps"], **kwargs)


def gru_field_names() -> tuple[str, ...]:
    return _PARAMS
