"""Versioned JSON model checkpoints.

A checkpoint carries everything needed to serve or evaluate a trained
policy: vocabulary, training configuration, the graph content hash and all
parameter tensors. Serialization is canonical (sorted keys, no whitespace)
so identical runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..corpus import Vocabulary
from .network import NetDims, PARAM_NAMES, QNetwork

FORMAT = "graphdx.checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    """Unreadable checkpoint or shape mismatch on load."""


@dataclass(frozen=True)
class Checkpoint:
    net: QNetwork
    vocab: Vocabulary
    config: dict
    graph_hash: str
    file_hash: str


def checkpoint_bytes(net: QNetwork, vocab: Vocabulary, config: dict,
                     graph_hash: str) -> bytes:
    payload = {
        "format": FORMAT,
        "version": VERSION,
        "mode": net.mode,
        "dims": net.dims.to_dict(),
        "vocabulary": vocab.to_dict(),
        "config": config,
        "graph_hash": graph_hash,
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in net.named_params()
        },
    }
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def save_checkpoint(path, net: QNetwork, vocab: Vocabulary, config: dict,
                    graph_hash: str) -> str:
    """Write the checkpoint; returns its sha256 file hash."""
    blob = checkpoint_bytes(net, vocab, config, graph_hash)
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


def load_checkpoint(path) -> Checkpoint:
    """Read and validate a checkpoint, refusing mismatched tensor shapes."""
    path = Path(path)
    blob = path.read_bytes()
    try:
        data = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: not a valid checkpoint ({exc})") from exc
    if data.get("format") != FORMAT:
        raise CheckpointError(f"{path}: not a checkpoint file")
    if data.get("version") != VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {data.get('version')!r}")
    try:
        dims = NetDims.from_dict(data["dims"])
        vocab = Vocabulary.from_dict(data["vocabulary"])
        mode = data["mode"]
        raw_params = data["params"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed checkpoint ({exc})") from exc

    if vocab.num_actions != dims.n_actions:
        raise CheckpointError(
            f"{path}: vocabulary has {vocab.num_actions} actions, "
            f"dims expect {dims.n_actions}")

    params = {}
    for name in PARAM_NAMES:
        if name not in raw_params:
            raise CheckpointError(f"{path}: missing parameter {name!r}")
        entry = raw_params[name]
        shape = tuple(entry["shape"])
        data_list = entry["data"]
        if len(data_list) != int(np.prod(shape)):
            raise CheckpointError(
                f"{path}: parameter {name!r} has {len(data_list)} values "
                f"for shape {shape}")
        params[name] = np.array(data_list, dtype=np.float64).reshape(shape)
    try:
        net = QNetwork(mode=mode, dims=dims, **params)
    except ValueError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
    return Checkpoint(
        net=net,
        vocab=vocab,
        config=dict(data.get("config") or {}),
        graph_hash=str(data.get("graph_hash") or ""),
        file_hash=hashlib.sha256(blob).hexdigest(),
    )
