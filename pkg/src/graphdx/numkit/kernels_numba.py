"""Numba @njit kernels: accelerated twin of kernels_numpy.

Matrix products go through np.dot (BLAS) exactly as in the numpy build;
gathers and scatters are explicit loops in ascending batch order so both
backends accumulate identically. Importing this module requires numba.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = {"cache": True, "nogil": True}


@njit(**_JIT)
def hidden_forward(w1, b1, w2, b2, states):
    z1 = states @ w1 + b1
    a1 = np.maximum(z1, 0.0)
    sh = a1 @ w2 + b2
    return z1, a1, sh


@njit(**_JIT)
def gcn_embed(a_norm, wg):
    pre = a_norm @ wg
    return pre, np.maximum(pre, 0.0)


@njit(**_JIT)
def q_graph_all(h, sh):
    return sh @ np.ascontiguousarray(h.T)


@njit(**_JIT)
def q_baseline_all(head_w, head_b, sh):
    return sh @ head_w + head_b


@njit(**_JIT)
def huber_terms(delta, alpha):
    adelta = np.abs(delta)
    loss = np.where(adelta <= alpha,
                    0.5 * delta * delta,
                    alpha * (adelta - 0.5 * alpha))
    dpred = -np.minimum(np.maximum(delta, -alpha), alpha)
    return loss, dpred


@njit(**_JIT)
def graph_loss_grads(w1, b1, w2, b2, wg, a_norm, states, actions, targets, alpha):
    batch = states.shape[0]
    embed = wg.shape[1]
    z1, a1, sh = hidden_forward(w1, b1, w2, b2, states)
    pre, h = gcn_embed(a_norm, wg)

    h_taken = np.empty((batch, embed), dtype=np.float64)
    for b in range(batch):
        h_taken[b, :] = h[actions[b], :]
    q = np.sum(sh * h_taken, axis=1)
    loss_vec, dq = huber_terms(targets - q, alpha)
    loss = loss_vec.mean()
    dq = dq / batch

    dsh = np.empty_like(sh)
    for b in range(batch):
        dsh[b, :] = dq[b] * h_taken[b, :]
    dh = np.zeros_like(h)
    for b in range(batch):
        a = actions[b]
        for c in range(embed):
            dh[a, c] += dq[b] * sh[b, c]
    dpre = np.where(pre > 0.0, dh, 0.0)
    dwg = np.ascontiguousarray(a_norm.T) @ dpre

    db2 = np.sum(dsh, axis=0)
    dw2 = np.ascontiguousarray(a1.T) @ dsh
    da1 = dsh @ np.ascontiguousarray(w2.T)
    dz1 = np.where(z1 > 0.0, da1, 0.0)
    db1 = np.sum(dz1, axis=0)
    dw1 = np.ascontiguousarray(states.T) @ dz1
    return loss, dw1, db1, dw2, db2, dwg


@njit(**_JIT)
def baseline_loss_grads(w1, b1, w2, b2, head_w, head_b, states, actions,
                        targets, alpha):
    batch = states.shape[0]
    embed = head_w.shape[0]
    z1, a1, sh = hidden_forward(w1, b1, w2, b2, states)

    head_taken = np.empty((batch, embed), dtype=np.float64)
    for b in range(batch):
        head_taken[b, :] = head_w[:, actions[b]]
    q = np.empty(batch, dtype=np.float64)
    for b in range(batch):
        q[b] = np.sum(sh[b, :] * head_taken[b, :]) + head_b[actions[b]]
    loss_vec, dq = huber_terms(targets - q, alpha)
    loss = loss_vec.mean()
    dq = dq / batch

    dsh = np.empty_like(sh)
    for b in range(batch):
        dsh[b, :] = dq[b] * head_taken[b, :]
    dhead_w = np.zeros_like(head_w)
    dhead_b = np.zeros_like(head_b)
    for b in range(batch):
        a = actions[b]
        for c in range(embed):
            dhead_w[c, a] += dq[b] * sh[b, c]
        dhead_b[a] += dq[b]

    db2 = np.sum(dsh, axis=0)
    dw2 = np.ascontiguousarray(a1.T) @ dsh
    da1 = dsh @ np.ascontiguousarray(w2.T)
    dz1 = np.where(z1 > 0.0, da1, 0.0)
    db1 = np.sum(dz1, axis=0)
    dw1 = np.ascontiguousarray(states.T) @ dz1
    return loss, dw1, db1, dw2, db2, dhead_w, dhead_b
