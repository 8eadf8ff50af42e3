"""Weighted symptom-disease graph construction.

Nodes follow the vocabulary's action ordering (greetings, diseases,
symptoms). Symptom-symptom edges carry positive pointwise mutual information
computed over dialogue co-occurrence; symptom-disease edges carry
sf-idf (symptom frequency - inverse disease frequency). Every node gets a
unit self-loop; greeting nodes carry nothing else. Natural log throughout.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusCounts, Vocabulary


class GraphError(ValueError):
    """Inconsistent counts or degenerate adjacency input."""


EDGE_NONE = 0
EDGE_SELF = 1
EDGE_PMI = 2
EDGE_SFIDF = 3
EDGE_KIND_NAMES = ("none", "self", "pmi", "sfidf")


def pmi(counts: CorpusCounts, i: int, j: int) -> float | None:
    """Pointwise mutual information between symptoms i and j (positions).

    Returns None when the pair never co-occurs or when the value is <= 0,
    i.e. when co-occurrence gives no evidence of correlation.
    """
    if i == j:
        raise GraphError("pmi is defined for distinct symptoms")
    total = counts.total_dialogues
    if total <= 0:
        raise GraphError("pmi requires a non-empty corpus")
    joint = counts.co_occurrence[i, j]
    if joint == 0:
        return None
    p_ij = joint / total
    p_i = counts.symptom_dialogues[i] / total
    p_j = counts.symptom_dialogues[j] / total
    value = math.log(p_ij / (p_i * p_j))
    return value if value > 0.0 else None


def sf_idf(counts: CorpusCounts, i: int, j: int) -> float:
    """Symptom frequency - inverse disease frequency for symptom i, disease j.

    sf is symptom i's share of disease j's true symptom occurrences; idf
    down-weights symptoms that occur in many diseases. A symptom that never
    occurs anywhere gets weight 0 rather than a division error.
    """
    denom = counts.disease_totals[j]
    sf = counts.disease_symptom[i, j] / denom if denom > 0 else 0.0
    incidence = counts.symptom_disease_incidence[i]
    if incidence == 0:
        return 0.0
    idf = math.log(len(counts.disease_totals) / incidence)
    return sf * idf


@dataclass(frozen=True)
class HeteroGraph:
    """Dense weighted graph over greeting/disease/symptom nodes."""

    vocab: Vocabulary
    adjacency: np.ndarray     # (n, n) float64, symmetric, unit diagonal
    normalized: np.ndarray    # D^{-1/2} A D^{-1/2}
    edge_kind: np.ndarray     # (n, n) uint8 codes into EDGE_KIND_NAMES
    weighted: bool = True

    @property
    def num_nodes(self) -> int:
        return self.vocab.num_actions

    def content_hash(self) -> str:
        """Stable digest of the vocabulary plus adjacency, for checkpoints."""
        h = hashlib.sha256()
        h.update(json.dumps(self.vocab.to_dict(), sort_keys=True).encode("utf-8"))
        h.update(b"weighted" if self.weighted else b"unweighted")
        h.update(np.ascontiguousarray(self.adjacency, dtype=np.float64).tobytes())
        h.update(np.ascontiguousarray(self.edge_kind, dtype=np.uint8).tobytes())
        return h.hexdigest()


def normalize_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization D^{-1/2} A D^{-1/2}."""
    a = np.asarray(adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphError("adjacency must be a square matrix")
    if np.any(a < 0):
        raise GraphError("adjacency entries must be non-negative")
    degrees = a.sum(axis=1)
    if np.any(degrees <= 0):
        raise GraphError("zero-degree node; adjacency needs self-loops")
    inv_sqrt = 1.0 / np.sqrt(degrees)
    return a * np.outer(inv_sqrt, inv_sqrt)


def build_adjacency(counts: CorpusCounts, vocab: Vocabulary,
                    weighted: bool = True) -> HeteroGraph:
    """Assemble the full graph: self-loops, PMI and sf-idf edges.

    With weighted=False every nonzero off-diagonal weight is flattened to 1,
    keeping the topology but discarding edge strength.
    """
    if counts.co_occurrence.shape[0] != vocab.num_symptoms:
        raise GraphError("counts do not match vocabulary symptom count")
    if counts.disease_symptom.shape[1] != vocab.num_diseases:
        raise GraphError("counts do not match vocabulary disease count")

    n = vocab.num_actions
    base = vocab.num_greeting
    adjacency = np.zeros((n, n), dtype=np.float64)
    kinds = np.zeros((n, n), dtype=np.uint8)

    np.fill_diagonal(adjacency, 1.0)
    np.fill_diagonal(kinds, EDGE_SELF)

    for si in range(vocab.num_symptoms):
        row = base + vocab.num_diseases + si
        for sj in range(si + 1, vocab.num_symptoms):
            col = base + vocab.num_diseases + sj
            value = pmi(counts, si, sj)
            if value is not None:
                adjacency[row, col] = adjacency[col, row] = value
                kinds[row, col] = kinds[col, row] = EDGE_PMI
        for dj in range(vocab.num_diseases):
            col = base + dj
            weight = sf_idf(counts, si, dj)
            if weight > 0.0:
                adjacency[row, col] = adjacency[col, row] = weight
                kinds[row, col] = kinds[col, row] = EDGE_SFIDF

    if not weighted:
        off_diag = ~np.eye(n, dtype=bool)
        adjacency[off_diag & (adjacency != 0.0)] = 1.0

    return HeteroGraph(
        vocab=vocab,
        adjacency=adjacency,
        normalized=normalize_adjacency(adjacency),
        edge_kind=kinds,
        weighted=weighted,
    )


def save_graph(graph: HeteroGraph, path) -> None:
    """Write the graph as JSON: vocabulary plus dense row-major matrices."""
    payload = {
        "format": "graphdx.graph",
        "version": 1,
        "weighted": graph.weighted,
        "vocabulary": graph.vocab.to_dict(),
        "adjacency": graph.adjacency.ravel().tolist(),
        "normalized": graph.normalized.ravel().tolist(),
        "edge_kind": [EDGE_KIND_NAMES[k] for k in graph.edge_kind.ravel()],
        "content_hash": graph.content_hash(),
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_graph(path) -> HeteroGraph:
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if data.get("format") != "graphdx.graph":
        raise GraphError(f"{path}: not a graph file")
    if data.get("version") != 1:
        raise GraphError(f"{path}: unsupported graph version {data.get('version')!r}")
    vocab = Vocabulary.from_dict(data["vocabulary"])
    n = vocab.num_actions
    kind_codes = {name: code for code, name in enumerate(EDGE_KIND_NAMES)}
    try:
        adjacency = np.array(data["adjacency"], dtype=np.float64).reshape(n, n)
        normalized = np.array(data["normalized"], dtype=np.float64).reshape(n, n)
        kinds = np.array([kind_codes[k] for k in data["edge_kind"]],
                         dtype=np.uint8).reshape(n, n)
    except (ValueError, KeyError) as exc:
        raise GraphError(f"{path}: malformed graph payload ({exc})") from exc
    graph = HeteroGraph(vocab=vocab, adjacency=adjacency, normalized=normalized,
                        edge_kind=kinds, weighted=bool(data.get("weighted", True)))
    stored = data.get("content_hash")
    if stored and stored != graph.content_hash():
        raise GraphError(f"{path}: content hash mismatch (file was edited?)")
    return graph


def write_edge_tsv(graph: HeteroGraph, path) -> None:
    """Human-readable edge list: one `src dst weight kind` row per edge."""
    names = graph.vocab.action_names
    lines = ["src\tdst\tweight\tkind"]
    n = graph.num_nodes
    for i in range(n):
        for j in range(i, n):
            if graph.adjacency[i, j] != 0.0:
                kind = EDGE_KIND_NAMES[graph.edge_kind[i, j]]
                lines.append(f"{names[i]}\t{names[j]}\t{graph.adjacency[i, j]:.12g}\t{kind}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
