"""Public numeric operations over QNetwork, dispatched to the active backend.

Single-state calls accept 1-d vectors; batched calls accept 2-d row-stacked
arrays. Everything is coerced to C-contiguous float64 at this boundary so
the kernels can assume clean inputs.
"""

from __future__ import annotations

import numpy as np

from .backend import kernels
from .network import MODE_BASELINE, MODE_GRAPH, QNetwork


class NumericError(ValueError):
    """Shape mismatch or non-finite training state."""


def _as_batch(x, dim: int, what: str) -> tuple[np.ndarray, bool]:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise NumericError(f"{what} must have {dim} features, got shape {np.shape(x)}")
    return arr, single


def _as_matrix(x, shape, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.shape != shape:
        raise NumericError(f"{what} must have shape {shape}, got {arr.shape}")
    return arr


def mlp_forward(net: QNetwork, state):
    """Hidden representation of one state (or a batch of states)."""
    states, single = _as_batch(state, net.dims.d_state, "state")
    _, _, sh = kernels().hidden_forward(net.w1, net.b1, net.w2, net.b2, states)
    return sh[0] if single else sh


def gcn_forward(net: QNetwork, a_norm) -> np.ndarray:
    """Node embeddings: one rectified graph convolution of the weight matrix.

    Node features are the identity, so the layer reduces to relu(a_norm @ wg).
    """
    n = net.dims.n_actions
    a_norm = _as_matrix(a_norm, (n, n), "normalized adjacency")
    _, h = kernels().gcn_embed(a_norm, net.wg)
    return h


def q_values(h, s_h):
    """Per-action inner products between node embeddings and a hidden state."""
    h = np.ascontiguousarray(h, dtype=np.float64)
    s_h_arr, single = _as_batch(s_h, h.shape[1], "hidden state")
    q = kernels().q_graph_all(h, s_h_arr)
    return q[0] if single else q


def action_values(net: QNetwork, a_norm, state, h: np.ndarray | None = None):
    """Q-values over all actions for one state or a batch.

    Graph mode consumes the normalized adjacency (or a precomputed embedding
    matrix h); baseline mode never touches the graph and a_norm may be None.
    """
    states, single = _as_batch(state, net.dims.d_state, "state")
    _, _, sh = kernels().hidden_forward(net.w1, net.b1, net.w2, net.b2, states)
    if net.mode == MODE_GRAPH:
        if h is None:
            h = gcn_forward(net, a_norm)
        q = kernels().q_graph_all(np.ascontiguousarray(h, dtype=np.float64), sh)
    else:
        q = kernels().q_baseline_all(net.head_w, net.head_b, sh)
    return q[0] if single else q


def huber_loss(pred: float, target: float, alpha: float):
    """Huber loss and its derivative w.r.t. the prediction.

    Quadratic for residuals within +-alpha, linear beyond; the derivative is
    clipped to +-alpha accordingly.
    """
    if alpha <= 0:
        raise NumericError("alpha must be positive")
    delta = target - pred
    if abs(delta) <= alpha:
        return 0.5 * delta * delta, -delta
    return alpha * (abs(delta) - 0.5 * alpha), -alpha * np.sign(delta)


def batch_loss(net: QNetwork, states, actions, targets, a_norm,
               alpha: float) -> float:
    """Mean Huber loss of the taken actions' Q-values against targets."""
    states, _ = _as_batch(states, net.dims.d_state, "states")
    actions = np.ascontiguousarray(actions, dtype=np.int64)
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    q = action_values(net, a_norm, states)
    taken = q[np.arange(len(actions)), actions]
    loss_vec, _ = kernels().huber_terms(targets - taken, float(alpha))
    return float(loss_vec.mean())


def loss_and_grads(net: QNetwork, states, actions, targets, a_norm,
                   alpha: float):
    """Mean Huber loss plus gradients for the mode's trained parameters."""
    states, _ = _as_batch(states, net.dims.d_state, "states")
    if len(states) == 0:
        raise NumericError("empty batch")
    actions = np.ascontiguousarray(actions, dtype=np.int64)
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    if actions.shape != (len(states),) or targets.shape != (len(states),):
        raise NumericError("states, actions and targets must align")
    if actions.min() < 0 or actions.max() >= net.dims.n_actions:
        raise NumericError("action index out of range")

    if net.mode == MODE_GRAPH:
        n = net.dims.n_actions
        a_norm = _as_matrix(a_norm, (n, n), "normalized adjacency")
        loss, dw1, db1, dw2, db2, dwg = kernels().graph_loss_grads(
            net.w1, net.b1, net.w2, net.b2, net.wg,
            a_norm, states, actions, targets, float(alpha))
        grads = {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2, "wg": dwg}
    else:
        loss, dw1, db1, dw2, db2, dhw, dhb = kernels().baseline_loss_grads(
            net.w1, net.b1, net.w2, net.b2, net.head_w, net.head_b,
            states, actions, targets, float(alpha))
        grads = {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2,
                 "head_w": dhw, "head_b": dhb}
    return float(loss), grads


def backward_and_step(net: QNetwork, states, actions, targets, a_norm,
                      lr: float, alpha: float) -> float:
    """One SGD step on the mean Huber loss; returns the pre-step loss.

    Only the taken action's Q-value receives loss in each transition. A
    non-finite loss aborts training rather than corrupting the parameters.
    """
    loss, grads = loss_and_grads(net, states, actions, targets, a_norm, alpha)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite training loss: {loss}")
    for name, grad in grads.items():
        param = getattr(net, name)
        param -= lr * grad
    return loss
