"""Shared fixtures: the four-goal toy corpus, its graph, and handcrafted
pass-through networks whose behaviour is readable off their head weights.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from graphdx import dialogue_env
from graphdx.corpus import UserGoal, Vocabulary, build_vocabulary, tally_counts
from graphdx.medgraph import build_adjacency
from graphdx.numkit import MODE_BASELINE, NetDims, QNetwork

# Four dialogues, two diseases, three symptoms; everything self-reported.
T1_GOAL_DICTS = [
    {"id": "g1", "disease": "d1",
     "explicit_symptoms": {"s1": True, "s2": True}, "implicit_symptoms": {}},
    {"id": "g2", "disease": "d1",
     "explicit_symptoms": {"s1": True, "s2": True}, "implicit_symptoms": {}},
    {"id": "g3", "disease": "d2",
     "explicit_symptoms": {"s2": True, "s3": True}, "implicit_symptoms": {}},
    {"id": "g4", "disease": "d2",
     "explicit_symptoms": {"s3": True}, "implicit_symptoms": {}},
]


def goals_from_dicts(dicts):
    return [UserGoal(id=g["id"], disease=g["disease"],
                     explicit_symptoms=g.get("explicit_symptoms", {}),
                     implicit_symptoms=g.get("implicit_symptoms", {}))
            for g in dicts]


@pytest.fixture
def t1_goals():
    return goals_from_dicts(T1_GOAL_DICTS)


@pytest.fixture
def t1_vocab(t1_goals):
    return build_vocabulary(t1_goals)


@pytest.fixture
def t1_counts(t1_goals, t1_vocab):
    return tally_counts(t1_goals, t1_vocab)


@pytest.fixture
def t1_graph(t1_counts, t1_vocab):
    return build_adjacency(t1_counts, t1_vocab)


@pytest.fixture
def t1_corpus_file(tmp_path):
    path = tmp_path / "t1.json"
    path.write_text(json.dumps({"goals": T1_GOAL_DICTS}), encoding="utf-8")
    return path


class FeatureMap:
    """Index helpers into the encoded dialogue state."""

    def __init__(self, vocab: Vocabulary, max_turns: int = 22):
        self.vocab = vocab
        self.n = vocab.num_actions
        self.max_turns = max_turns
        self.dim = dialogue_env.state_dim(vocab, max_turns)

    def prev_system(self, action: int) -> int:
        return action

    def user(self, name: str) -> int:
        return self.n + dialogue_env.USER_ACTIONS.index(name)

    def true_ch(self, symptom: str) -> int:
        return self.n + 4 + self.vocab.symptom_pos(symptom)

    def false_ch(self, symptom: str) -> int:
        return self.n + 4 + self.vocab.num_symptoms + self.vocab.symptom_pos(symptom)

    def not_sure_ch(self, symptom: str) -> int:
        return self.n + 4 + 2 * self.vocab.num_symptoms + self.vocab.symptom_pos(symptom)

    def turn(self, t: int) -> int:
        return self.n + 4 + 3 * self.vocab.num_symptoms + t


def passthrough_net(vocab: Vocabulary, column_weights, biases,
                    max_turns: int = 22) -> QNetwork:
    """Baseline-mode net whose Q-values are a chosen linear map of the state.

    The two-layer encoder is wired as the identity (state entries are
    non-negative so the rectifier passes them through), making
    q = state @ head + bias exactly.
    """
    fm = FeatureMap(vocab, max_turns)
    d = fm.dim
    n = vocab.num_actions
    head = np.zeros((d, n))
    for action, weights in column_weights.items():
        for feature_idx, w in weights.items():
            head[feature_idx, action] = w
    head_b = np.zeros(n)
    for action, b in biases.items():
        head_b[action] = b
    dims = NetDims(d_state=d, hidden=d, embed=d, n_actions=n)
    return QNetwork(
        mode=MODE_BASELINE, dims=dims,
        w1=np.eye(d), b1=np.zeros(d),
        w2=np.eye(d), b2=np.zeros(d),
        wg=np.zeros((n, d)),
        head_w=head, head_b=head_b,
    )


def scripted_t1_net(vocab: Vocabulary) -> QNetwork:
    """Policy for the toy vocabulary: greet once, ask the unknown symptoms in
    a fixed order, then diagnose d1 when s1 was confirmed else d2 when s3 was.
    """
    fm = FeatureMap(vocab)
    greet, close = 0, 1
    d1, d2 = vocab.disease_action("d1"), vocab.disease_action("d2")
    a1, a2, a3 = (vocab.symptom_action(s) for s in ("s1", "s2", "s3"))

    def known(symptom):
        return {fm.true_ch(symptom): -9.0, fm.false_ch(symptom): -9.0,
                fm.not_sure_ch(symptom): -9.0}

    columns = {
        greet: {fm.user("request"): 10.0},  # only attractive on the first turn
        d1: {fm.true_ch("s1"): 0.5, fm.false_ch("s1"): -5.0},
        d2: {fm.true_ch("s3"): 0.5, fm.false_ch("s3"): -5.0},
        a1: known("s1"),
        a2: known("s2"),
        a3: known("s3"),
    }
    biases = {close: -5.0, d1: 2.0, d2: 2.0, a1: 5.0, a2: 4.0, a3: 3.0}
    return passthrough_net(vocab, columns, biases)


def never_diagnose_net(vocab: Vocabulary) -> QNetwork:
    """Policy that keeps re-asking the first symptom until the turn limit."""
    asks = {vocab.symptom_action(s): 1.0 - 0.1 * i
            for i, s in enumerate(vocab.symptoms)}
    biases = {a: b for a, b in asks.items()}
    for d in vocab.diseases:
        biases[vocab.disease_action(d)] = -10.0
    return passthrough_net(vocab, {}, biases)


def inform_first_net(vocab: Vocabulary) -> QNetwork:
    """Toy-vocabulary policy that diagnoses immediately from the self-report:
    d1 when s1 is reported true, d2 when s3 is."""
    fm = FeatureMap(vocab)
    d1, d2 = vocab.disease_action("d1"), vocab.disease_action("d2")
    columns = {
        d1: {fm.true_ch("s1"): 1.0, fm.true_ch("s3"): -1.0},
        d2: {fm.true_ch("s3"): 1.0, fm.true_ch("s1"): -1.0},
    }
    return passthrough_net(vocab, columns, {d1: 1.0, d2: 1.0})
