"""Dialogue episode state machine and rule-based patient simulator.

One episode runs from the self-report to either a diagnosis or the turn
limit. The transition logic lives in `advance`, which is shared verbatim by
the simulator (`step`, answers read off the goal) and by the live HTTP
service (answers supplied by a human), so turn accounting can never drift
between the two.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .corpus import CorpusError, UserGoal, Vocabulary

MAX_TURNS = 22
SUCCESS_REWARD = 44.0
FAILURE_REWARD = -22.0

USER_REQUEST = "request"
USER_CONFIRM = "confirm"
USER_DENY = "deny"
USER_NOT_SURE = "not_sure"
USER_ACTIONS = (USER_REQUEST, USER_CONFIRM, USER_DENY, USER_NOT_SURE)

ANSWER_TRUE = "true"
ANSWER_FALSE = "false"
ANSWER_NOT_SURE = "not_sure"
ANSWERS = (ANSWER_TRUE, ANSWER_FALSE, ANSWER_NOT_SURE)

# symptom_status codes
STATUS_UNKNOWN = 0
STATUS_TRUE = 1
STATUS_FALSE = 2
STATUS_NOT_SURE = 3

_ANSWER_TO_STATUS = {ANSWER_TRUE: STATUS_TRUE, ANSWER_FALSE: STATUS_FALSE,
                     ANSWER_NOT_SURE: STATUS_NOT_SURE}
_ANSWER_TO_USER_ACTION = {ANSWER_TRUE: USER_CONFIRM, ANSWER_FALSE: USER_DENY,
                          ANSWER_NOT_SURE: USER_NOT_SURE}

RESULT_ONGOING = "ongoing"
RESULT_SUCCESS = "success"
RESULT_WRONG = "fail_wrong_disease"
RESULT_TIMEOUT = "fail_timeout"


class DialogueError(ValueError):
    """Invalid action, answer, or stepping a finished episode."""


@dataclass
class DialogueState:
    """Mutable per-episode state; `done` flags a finished episode."""

    prev_system_action: int | None
    prev_user_action: str
    symptom_status: np.ndarray  # (N,) int8 status codes
    turn: int
    done: bool = False

    def copy(self) -> "DialogueState":
        return replace(self, symptom_status=self.symptom_status.copy())


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    terminal: bool
    result: str
    user_action: str | None  # None when the episode ends on a diagnosis


@dataclass(frozen=True)
class TransitionInfo:
    """What `advance` did, before any reward judgement."""

    kind: str                      # greeting | disease | symptom
    action_name: str
    user_action: str | None
    answer: str | None
    informed_disease: str | None
    timed_out: bool
    repeated_inquiry: bool


def initial_state(self_report: Mapping[str, bool], vocab: Vocabulary) -> DialogueState:
    """Fresh episode state seeded with the self-reported symptom values."""
    status = np.full(vocab.num_symptoms, STATUS_UNKNOWN, dtype=np.int8)
    for name, value in self_report.items():
        status[vocab.symptom_pos(name)] = STATUS_TRUE if value else STATUS_FALSE
    return DialogueState(prev_system_action=None, prev_user_action=USER_REQUEST,
                         symptom_status=status, turn=0)


def start_episode(goal: UserGoal, vocab: Vocabulary) -> DialogueState:
    """Start a simulated episode from a goal's explicit symptoms."""
    vocab.disease_pos(goal.disease)
    for name in goal.implicit_symptoms:
        vocab.symptom_pos(name)
    return initial_state(goal.explicit_symptoms, vocab)


def answer_from_goal(goal: UserGoal, symptom: str) -> str:
    """Simulated patient reply: true/false when the goal knows the symptom,
    not_sure when it does not appear in the goal at all."""
    value = goal.symptom_value(symptom)
    if value is None:
        return ANSWER_NOT_SURE
    return ANSWER_TRUE if value else ANSWER_FALSE


def advance(state: DialogueState, action: int, vocab: Vocabulary, *,
            answer: str | None = None,
            max_turns: int = MAX_TURNS) -> tuple[DialogueState, TransitionInfo]:
    """Apply one system action (plus the user's answer) to the state.

    Greeting actions burn a turn; symptom inquiries record the answer;
    disease actions end the episode. Hitting the turn limit without a
    diagnosis also ends it. Returns a new state, leaving the input intact.
    """
    if state.done:
        raise DialogueError("episode already finished")
    kind = vocab.action_kind(action)  # raises on out-of-range index
    name = vocab.action_name(action)

    nxt = state.copy()
    nxt.turn = state.turn + 1
    nxt.prev_system_action = action

    user_action: str | None = None
    informed: str | None = None
    repeated = False

    if kind == "symptom":
        if answer not in ANSWERS:
            raise DialogueError(f"symptom inquiry needs an answer, got {answer!r}")
        pos = vocab.symptom_pos(name)
        repeated = state.symptom_status[pos] != STATUS_UNKNOWN
        nxt.symptom_status[pos] = _ANSWER_TO_STATUS[answer]
        user_action = _ANSWER_TO_USER_ACTION[answer]
    elif kind == "greeting":
        # no information exchanged; the simulator shrugs
        user_action = USER_NOT_SURE
    else:
        informed = name
        nxt.done = True

    if user_action is not None:
        nxt.prev_user_action = user_action

    timed_out = False
    if not nxt.done and nxt.turn >= max_turns:
        nxt.done = True
        timed_out = True

    return nxt, TransitionInfo(kind=kind, action_name=name, user_action=user_action,
                               answer=answer if kind == "symptom" else None,
                               informed_disease=informed, timed_out=timed_out,
                               repeated_inquiry=repeated)


def step(state: DialogueState, goal: UserGoal, action: int, vocab: Vocabulary, *,
         max_turns: int = MAX_TURNS,
         success_reward: float = SUCCESS_REWARD,
         failure_reward: float = FAILURE_REWARD,
         repeat_penalty: float = 0.0) -> tuple[DialogueState, StepOutcome]:
    """Simulator step: answer from the goal, then judge the transition.

    Per-step reward is zero; only terminal steps pay out (discounting
    supplies the pressure to finish quickly). The optional repeat_penalty
    charges re-asking an already-answered symptom and defaults off.
    """
    answer = None
    if vocab.action_kind(action) == "symptom":
        answer = answer_from_goal(goal, vocab.action_name(action))
    nxt, info = advance(state, action, vocab, answer=answer, max_turns=max_turns)

    if info.informed_disease is not None:
        correct = info.informed_disease == goal.disease
        outcome = StepOutcome(
            reward=success_reward if correct else failure_reward,
            terminal=True,
            result=RESULT_SUCCESS if correct else RESULT_WRONG,
            user_action=None,
        )
    elif info.timed_out:
        outcome = StepOutcome(reward=failure_reward, terminal=True,
                              result=RESULT_TIMEOUT, user_action=info.user_action)
    else:
        reward = -repeat_penalty if (info.repeated_inquiry and repeat_penalty) else 0.0
        outcome = StepOutcome(reward=reward, terminal=False,
                              result=RESULT_ONGOING, user_action=info.user_action)
    return nxt, outcome


def state_dim(vocab: Vocabulary, max_turns: int = MAX_TURNS) -> int:
    """Length of the fixed state encoding."""
    return vocab.num_actions + len(USER_ACTIONS) + 3 * vocab.num_symptoms + (max_turns + 1)


def encode_state(state: DialogueState, vocab: Vocabulary,
                 max_turns: int = MAX_TURNS) -> np.ndarray:
    """Fixed-length numeric encoding of a dialogue state.

    Layout: one-hot previous system action (n, all-zero before the first
    action), one-hot previous user action (4), three indicator channels per
    symptom for true/false/not-sure (3N, unknown leaves all three zero),
    one-hot turn count (max_turns + 1).
    """
    n = vocab.num_actions
    n_sym = vocab.num_symptoms
    vec = np.zeros(state_dim(vocab, max_turns), dtype=np.float64)
    if state.prev_system_action is not None:
        if not 0 <= state.prev_system_action < n:
            raise DialogueError("previous system action out of range")
        vec[state.prev_system_action] = 1.0
    offset = n
    try:
        vec[offset + USER_ACTIONS.index(state.prev_user_action)] = 1.0
    except ValueError:
        raise DialogueError(f"unknown user action {state.prev_user_action!r}") from None
    offset += len(USER_ACTIONS)
    status = state.symptom_status
    vec[offset:offset + n_sym] = status == STATUS_TRUE
    offset += n_sym
    vec[offset:offset + n_sym] = status == STATUS_FALSE
    offset += n_sym
    vec[offset:offset + n_sym] = status == STATUS_NOT_SURE
    offset += n_sym
    if not 0 <= state.turn <= max_turns:
        raise DialogueError(f"turn {state.turn} outside 0..{max_turns}")
    vec[offset + state.turn] = 1.0
    return vec


def transcript_record(turn: int, state_before: DialogueState, action: int,
                      vocab: Vocabulary, outcome: StepOutcome) -> dict:
    """One JSON-lines record per step, for transcript logs and replay."""
    known = {
        vocab.symptoms[i]: ("true", "false", "not_sure")[int(code) - 1]
        for i, code in enumerate(state_before.symptom_status)
        if code != STATUS_UNKNOWN
    }
    return {
        "turn": turn,
        "known_symptoms": known,
        "action": vocab.action_name(action),
        "kind": vocab.action_kind(action),
        "answer": outcome.user_action,
        "reward": outcome.reward,
        "result": outcome.result,
    }


def validate_goal(goal: UserGoal, vocab: Vocabulary) -> None:
    """Raise CorpusError if the goal references names outside the vocabulary."""
    vocab.disease_pos(goal.disease)
    for name in goal.all_symptoms():
        if not vocab.has_symptom(name):
            raise CorpusError(f"goal {goal.id}: unknown symptom {name!r}")
