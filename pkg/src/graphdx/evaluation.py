"""Greedy evaluation over a test split plus diagnostics exports.

Evaluation is deterministic: epsilon is zero and ties break to the lowest
action index, so two runs over the same checkpoint and goals produce
identical reports.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dialogue_env, numkit
from .agent import select_action
from .corpus import UserGoal, Vocabulary
from .dialogue_env import RESULT_SUCCESS, RESULT_TIMEOUT
from .numkit import MODE_GRAPH, QNetwork

_NO_EXPLORATION_RNG = np.random.default_rng(0)  # never consulted at epsilon=0


@dataclass(frozen=True)
class EpisodeRecord:
    goal_id: str
    true_disease: str
    predicted_disease: str | None  # None when the dialogue timed out
    turns: int
    success: bool
    result: str


@dataclass
class EvalReport:
    accuracy: float
    avg_turns: float
    confusion: np.ndarray            # (M, M+1); last column = timeout
    confusion_normalized: np.ndarray
    records: list[EpisodeRecord] = field(default_factory=list)

    def to_json_dict(self, vocab: Vocabulary) -> dict:
        return {
            "accuracy": self.accuracy,
            "avg_turns": self.avg_turns,
            "num_episodes": len(self.records),
            "diseases": list(vocab.diseases),
            "confusion_columns": list(vocab.diseases) + ["timeout"],
            "confusion": self.confusion.tolist(),
            "confusion_normalized": self.confusion_normalized.tolist(),
            "episodes": [
                {
                    "goal_id": r.goal_id,
                    "true_disease": r.true_disease,
                    "predicted_disease": r.predicted_disease,
                    "turns": r.turns,
                    "success": r.success,
                    "result": r.result,
                }
                for r in self.records
            ],
        }


def run_greedy_episode(net: QNetwork, a_norm, goal: UserGoal, vocab: Vocabulary,
                       max_turns: int = dialogue_env.MAX_TURNS,
                       h: np.ndarray | None = None) -> EpisodeRecord:
    state = dialogue_env.start_episode(goal, vocab)
    predicted = None
    result = RESULT_TIMEOUT
    while not state.done:
        encoded = dialogue_env.encode_state(state, vocab, max_turns)
        action = select_action(net, a_norm, encoded, 0.0, _NO_EXPLORATION_RNG, h=h)
        state, outcome = dialogue_env.step(state, goal, action, vocab,
                                           max_turns=max_turns)
        if outcome.terminal:
            result = outcome.result
            if vocab.action_kind(action) == "disease":
                predicted = vocab.action_name(action)
    return EpisodeRecord(goal_id=goal.id, true_disease=goal.disease,
                         predicted_disease=predicted, turns=state.turn,
                         success=result == RESULT_SUCCESS, result=result)


def confusion_matrix(records: Sequence[EpisodeRecord],
                     vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    """Counts of (true disease, prediction); timeouts get their own column.

    The normalized variant divides each row by its total; rows with no
    cases stay all-zero.
    """
    if not records:
        raise ValueError("no episode records")
    m = vocab.num_diseases
    counts = np.zeros((m, m + 1), dtype=np.int64)
    for rec in records:
        row = vocab.disease_pos(rec.true_disease)
        col = m if rec.predicted_disease is None else vocab.disease_pos(rec.predicted_disease)
        counts[row, col] += 1
    row_sums = counts.sum(axis=1, keepdims=True)
    normalized = np.divide(counts, row_sums, out=np.zeros(counts.shape, dtype=np.float64),
                           where=row_sums > 0)
    return counts, normalized


def evaluate(net: QNetwork, a_norm, goals: Sequence[UserGoal], vocab: Vocabulary,
             max_turns: int = dialogue_env.MAX_TURNS) -> EvalReport:
    """One greedy episode per goal; accuracy and mean dialogue length.

    The closing diagnosis action counts as a turn.
    """
    if not goals:
        raise ValueError("empty test set")
    for goal in goals:
        dialogue_env.validate_goal(goal, vocab)
    h = numkit.gcn_forward(net, a_norm) if net.mode == MODE_GRAPH else None
    records = [run_greedy_episode(net, a_norm, g, vocab, max_turns, h=h)
               for g in goals]
    counts, normalized = confusion_matrix(records, vocab)
    return EvalReport(
        accuracy=sum(r.success for r in records) / len(records),
        avg_turns=sum(r.turns for r in records) / len(records),
        confusion=counts,
        confusion_normalized=normalized,
        records=records,
    )


def _power_iteration(matrix: np.ndarray, ortho: list[np.ndarray],
                     tol: float = 1e-10, max_iter: int = 10000) -> tuple[np.ndarray, float]:
    """Dominant eigenpair of a PSD matrix, deflated against `ortho`."""
    k = matrix.shape[0]
    v = np.ones(k) / np.sqrt(k)
    for prev in ortho:
        v -= (v @ prev) * prev
    norm = np.linalg.norm(v)
    if norm < tol:  # start vector degenerate; nudge deterministically
        v = np.zeros(k)
        v[len(ortho) % k] = 1.0
        for prev in ortho:
            v -= (v @ prev) * prev
        norm = np.linalg.norm(v)
    v /= norm
    eigenvalue = 0.0
    for _ in range(max_iter):
        w = matrix @ v
        for prev in ortho:
            w -= (w @ prev) * prev
        norm = np.linalg.norm(w)
        if norm < tol:
            return v, 0.0
        w /= norm
        if np.linalg.norm(w - v) < tol:
            v = w
            break
        v = w
    eigenvalue = float(v @ (matrix @ v))
    return v, eigenvalue


def pca_2d(points: np.ndarray) -> np.ndarray:
    """Project rows onto their top-2 principal axes via power iteration.

    Degenerate input (identical rows) maps everything to the origin. Axis
    signs are fixed so the largest-magnitude loading is positive.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("points must be 2-d")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered
    scale = np.abs(cov).max()
    if scale == 0.0:
        return np.zeros((x.shape[0], 2))
    components = []
    for _ in range(2):
        v, eigenvalue = _power_iteration(cov, components)
        if eigenvalue <= scale * 1e-14:
            # no variance left along this axis
            v = v.copy()
        pivot = np.argmax(np.abs(v))
        if v[pivot] < 0:
            v = -v
        components.append(v)
    return centered @ np.stack(components, axis=1)


def node_embeddings(net: QNetwork, a_norm) -> np.ndarray:
    """Per-action embedding rows: graph-convolution output in graph mode,
    the linear head's action vectors in baseline mode."""
    if net.mode == MODE_GRAPH:
        return numkit.gcn_forward(net, a_norm)
    return np.ascontiguousarray(net.head_w.T)


def export_embeddings_pca(net: QNetwork, a_norm,
                          vocab: Vocabulary) -> list[tuple[str, str, float, float]]:
    """2-d layout of every action node: (name, kind, x, y) rows."""
    coords = pca_2d(node_embeddings(net, a_norm))
    return [
        (vocab.action_name(i), vocab.action_kind(i),
         float(coords[i, 0]), float(coords[i, 1]))
        for i in range(vocab.num_actions)
    ]


def write_report_json(report: EvalReport, vocab: Vocabulary, path) -> None:
    Path(path).write_text(json.dumps(report.to_json_dict(vocab), indent=2) + "\n",
                          encoding="utf-8")


def write_confusion_csv(report: EvalReport, vocab: Vocabulary, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true_disease"] + list(vocab.diseases) + ["timeout"])
        for i, disease in enumerate(vocab.diseases):
            writer.writerow([disease] + report.confusion[i].tolist())


def write_embeddings_csv(rows: Sequence[tuple[str, str, float, float]], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "kind", "x", "y"])
        for name, kind, x, y in rows:
            writer.writerow([name, kind, repr(x), repr(y)])
