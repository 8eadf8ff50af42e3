"""Pure-numpy kernels: reference twin of the numba build.

Scatter accumulation (repeated actions within a batch) runs in ascending
batch order in both builds so the two backends agree to rounding error.
All arrays are float64, C-contiguous; actions are int64.
"""

from __future__ import annotations

import numpy as np


def hidden_forward(w1, b1, w2, b2, states):
    """Two-layer state encoder: relu hidden, linear output."""
    z1 = states @ w1 + b1
    a1 = np.maximum(z1, 0.0)
    sh = a1 @ w2 + b2
    return z1, a1, sh


def gcn_embed(a_norm, wg):
    """One graph-convolution layer over identity node features."""
    pre = a_norm @ wg
    return pre, np.maximum(pre, 0.0)


def q_graph_all(h, sh):
    """Q-values for every action: inner product of node embeddings with sh."""
    return sh @ h.T


def q_baseline_all(head_w, head_b, sh):
    """Plain linear Q-head for the no-graph baseline."""
    return sh @ head_w + head_b


def huber_terms(delta, alpha):
    """Per-sample Huber loss and d(loss)/d(prediction) for residual delta."""
    adelta = np.abs(delta)
    loss = np.where(adelta <= alpha,
                    0.5 * delta * delta,
                    alpha * (adelta - 0.5 * alpha))
    dpred = -np.minimum(np.maximum(delta, -alpha), alpha)
    return loss, dpred


def graph_loss_grads(w1, b1, w2, b2, wg, a_norm, states, actions, targets, alpha):
    """Mean Huber loss over taken actions plus gradients for all parameters."""
    batch = states.shape[0]
    z1, a1, sh = hidden_forward(w1, b1, w2, b2, states)
    pre, h = gcn_embed(a_norm, wg)
    h_taken = h[actions]
    q = np.sum(sh * h_taken, axis=1)
    loss_vec, dq = huber_terms(targets - q, alpha)
    loss = loss_vec.mean()
    dq = dq / batch

    dsh = dq[:, None] * h_taken
    dh = np.zeros_like(h)
    np.add.at(dh, actions, dq[:, None] * sh)
    dpre = np.where(pre > 0.0, dh, 0.0)
    dwg = np.ascontiguousarray(a_norm.T) @ dpre

    db2 = dsh.sum(axis=0)
    dw2 = np.ascontiguousarray(a1.T) @ dsh
    da1 = dsh @ np.ascontiguousarray(w2.T)
    dz1 = np.where(z1 > 0.0, da1, 0.0)
    db1 = dz1.sum(axis=0)
    dw1 = np.ascontiguousarray(states.T) @ dz1
    return loss, dw1, db1, dw2, db2, dwg


def baseline_loss_grads(w1, b1, w2, b2, head_w, head_b, states, actions,
                        targets, alpha):
    """Same loss through the linear head instead of the graph embeddings."""
    batch = states.shape[0]
    z1, a1, sh = hidden_forward(w1, b1, w2, b2, states)
    head_taken = np.ascontiguousarray(head_w.T)[actions]
    q = np.sum(sh * head_taken, axis=1) + head_b[actions]
    loss_vec, dq = huber_terms(targets - q, alpha)
    loss = loss_vec.mean()
    dq = dq / batch

    dsh = dq[:, None] * head_taken
    dhead_t = np.zeros((head_w.shape[1], head_w.shape[0]), dtype=np.float64)
    np.add.at(dhead_t, actions, dq[:, None] * sh)
    dhead_w = np.ascontiguousarray(dhead_t.T)
    dhead_b = np.zeros_like(head_b)
    np.add.at(dhead_b, actions, dq)

    db2 = dsh.sum(axis=0)
    dw2 = np.ascontiguousarray(a1.T) @ dsh
    da1 = dsh @ np.ascontiguousarray(w2.T)
    dz1 = np.where(z1 > 0.0, da1, 0.0)
    db1 = dz1.sum(axis=0)
    dw1 = np.ascontiguousarray(states.T) @ dz1
    return loss, dw1, db1, dw2, db2, dhead_w, dhead_b
