"""Policy training: epsilon-greedy exploration against the simulator,
experience replay, a periodically synced target network and SGD on the
Huber-Bellman loss. The same loop trains the graph-embedding policy and the
no-graph baseline (config.mode).
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dialogue_env, numkit
from .corpus import UserGoal, Vocabulary
from .dialogue_env import RESULT_SUCCESS
from .medgraph import HeteroGraph
from .numkit import MODE_BASELINE, MODE_GRAPH, NetDims, QNetwork


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Bounded FIFO of transitions with uniform no-replacement sampling."""

    def __init__(self, capacity: int = 10000):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self._items: deque[Transition] = deque(maxlen=capacity)

    @property
    def capacity(self) -> int:
        return self._items.maxlen or 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)

    def snapshot(self) -> list[Transition]:
        return list(self._items)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size > len(self._items):
            raise ValueError(
                f"cannot sample {batch_size} from buffer of size {len(self._items)}")
        indices = rng.choice(len(self._items), size=batch_size, replace=False)
        items = self._items
        return [items[int(i)] for i in indices]


@dataclass
class TrainConfig:
    """Training hyperparameters; defaults follow the deployment setup."""

    gamma: float = 0.9
    epsilon: float = 0.1
    alpha: float = 5.0
    lr: float = 0.01
    batch_size: int = 32
    epochs: int = 800
    episodes_per_epoch: int = 100
    buffer_capacity: int = 10000
    max_turns: int = 22
    success_reward: float = 44.0
    failure_reward: float = -22.0
    repeat_penalty: float = 0.0
    hidden_dim: int = 128
    embed_dim: int = 64
    num_greeting: int = 2
    weighted: bool = True
    mode: str = MODE_GRAPH
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        for name in ("alpha", "lr", "batch_size", "episodes_per_epoch",
                     "buffer_capacity", "max_turns", "hidden_dim", "embed_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.mode not in numkit.MODES:
            raise ValueError(f"mode must be one of {numkit.MODES}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    success_rate: float
    avg_turns: float
    epsilon: float


@dataclass
class TrainResult:
    net: QNetwork
    target_net: QNetwork
    log: list[EpochStats] = field(default_factory=list)


def select_action(net: QNetwork, a_norm, state_vec, epsilon: float,
                  rng: np.random.Generator, h: np.ndarray | None = None) -> int:
    """Epsilon-greedy action choice; greedy ties break to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(net.dims.n_actions))
    q = numkit.action_values(net, a_norm, state_vec, h=h)
    return int(np.argmax(q))


def bellman_targets(transitions: Sequence[Transition], target_net: QNetwork,
                    a_norm, gamma: float,
                    h: np.ndarray | None = None) -> np.ndarray:
    """Expected Q-values: reward, plus the discounted best next-state value
    from the frozen target network for non-terminal transitions."""
    if not transitions:
        raise ValueError("empty batch")
    rewards = np.array([t.reward for t in transitions], dtype=np.float64)
    terminal = np.array([t.terminal for t in transitions], dtype=bool)
    targets = rewards.copy()
    if not terminal.all():
        next_states = np.stack([t.next_state for t in transitions])
        q_next = numkit.action_values(target_net, a_norm, next_states, h=h)
        targets[~terminal] += gamma * q_next.max(axis=1)[~terminal]
    return targets


def sync_target(online: QNetwork, target: QNetwork) -> None:
    """Copy online parameters into the target network in place."""
    target.copy_params_from(online)


def run_episode(net: QNetwork, a_norm, goal: UserGoal, vocab: Vocabulary,
                config: TrainConfig, rng: np.random.Generator,
                epsilon: float, h: np.ndarray | None = None,
                ) -> tuple[list[Transition], bool, int]:
    """Play one simulated dialogue; returns its transitions, success, turns."""
    state = dialogue_env.start_episode(goal, vocab)
    encoded = dialogue_env.encode_state(state, vocab, config.max_turns)
    transitions: list[Transition] = []
    success = False
    while not state.done:
        action = select_action(net, a_norm, encoded, epsilon, rng, h=h)
        state, outcome = dialogue_env.step(
            state, goal, action, vocab,
            max_turns=config.max_turns,
            success_reward=config.success_reward,
            failure_reward=config.failure_reward,
            repeat_penalty=config.repeat_penalty,
        )
        next_encoded = dialogue_env.encode_state(state, vocab, config.max_turns)
        transitions.append(Transition(state=encoded, action=action,
                                      reward=outcome.reward,
                                      next_state=next_encoded,
                                      terminal=outcome.terminal))
        encoded = next_encoded
        if outcome.result == RESULT_SUCCESS:
            success = True
    return transitions, success, state.turn


def _batch_arrays(batch: Sequence[Transition]):
    states = np.stack([t.state for t in batch])
    actions = np.array([t.action for t in batch], dtype=np.int64)
    return states, actions


def initialize_network(config: TrainConfig, vocab: Vocabulary,
                       rng: np.random.Generator) -> QNetwork:
    dims = NetDims(
        d_state=dialogue_env.state_dim(vocab, config.max_turns),
        hidden=config.hidden_dim,
        embed=config.embed_dim,
        n_actions=vocab.num_actions,
    )
    return QNetwork.initialize(dims, config.mode, rng)


def train(config: TrainConfig, goals: Sequence[UserGoal], graph: HeteroGraph,
          progress=None) -> TrainResult:
    """Full training loop, fully deterministic for a given config.seed.

    Per epoch: simulate episodes_per_epoch dialogues with epsilon-greedy
    exploration into the replay buffer, then run floor(buffer/batch)
    SGD steps against targets from the frozen network, then sync it.
    The baseline mode never reads the graph's adjacency.
    """
    if not goals:
        raise ValueError("no training goals")
    vocab = graph.vocab
    for goal in goals:
        dialogue_env.validate_goal(goal, vocab)
    a_norm = None
    if config.mode == MODE_GRAPH:
        a_norm = np.ascontiguousarray(graph.normalized, dtype=np.float64)

    rng = np.random.default_rng(config.seed)
    net = initialize_network(config, vocab, rng)
    target = net.clone()
    buffer = ReplayBuffer(config.buffer_capacity)
    log: list[EpochStats] = []

    for epoch in range(config.epochs):
        # node embeddings are constant while parameters are frozen
        h_online = numkit.gcn_forward(net, a_norm) if config.mode == MODE_GRAPH else None
        successes = 0
        turns_total = 0
        for _ in range(config.episodes_per_epoch):
            goal = goals[int(rng.integers(len(goals)))]
            transitions, success, turns = run_episode(
                net, a_norm, goal, vocab, config, rng, config.epsilon, h=h_online)
            for t in transitions:
                buffer.push(t)
            successes += int(success)
            turns_total += turns

        steps = len(buffer) // config.batch_size
        loss_total = 0.0
        h_target = numkit.gcn_forward(target, a_norm) if config.mode == MODE_GRAPH else None
        for _ in range(steps):
            batch = buffer.sample(config.batch_size, rng)
            targets = bellman_targets(batch, target, a_norm, config.gamma, h=h_target)
            states, actions = _batch_arrays(batch)
            loss_total += numkit.backward_and_step(
                net, states, actions, targets, a_norm, config.lr, config.alpha)
        sync_target(net, target)

        stats = EpochStats(
            epoch=epoch,
            loss=loss_total / steps if steps else 0.0,
            success_rate=successes / config.episodes_per_epoch,
            avg_turns=turns_total / config.episodes_per_epoch,
            epsilon=config.epsilon,
        )
        log.append(stats)
        if progress is not None:
            progress(stats)

    return TrainResult(net=net, target_net=target, log=log)


def write_train_log(path, log: Sequence[EpochStats]) -> None:
    """CSV log: epoch,loss,success_rate,avg_turns,epsilon."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "success_rate", "avg_turns", "epsilon"])
        for row in log:
            writer.writerow([row.epoch, repr(row.loss), repr(row.success_rate),
                             repr(row.avg_turns), repr(row.epsilon)])
