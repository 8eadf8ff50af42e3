"""Diagnosis goal files: loading, validation, vocabularies and corpus tallies.

A goal file is UTF-8 JSON of the form::

    {"goals": [{"id": "g1",
                "disease": "d1",
                "explicit_symptoms": {"s1": true},
                "implicit_symptoms": {"s2": true, "s3": false}}, ...]}

Explicit symptoms are the patient's self-report; implicit symptoms are the
ones elicited during the conversation. A symptom "occurs" in a dialogue only
when its value is true -- negative or unsure answers never contribute to the
co-occurrence and frequency counts below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


class CorpusError(ValueError):
    """Malformed goal file or inconsistent goal record."""


def greeting_names(num_greeting: int) -> tuple[str, ...]:
    """Names for the non-medical actions occupying the first action slots."""
    if num_greeting < 0:
        raise CorpusError("num_greeting must be >= 0")
    if num_greeting == 2:
        return ("greet", "close")
    return tuple(f"greet_{i}" for i in range(num_greeting))


@dataclass(frozen=True)
class UserGoal:
    """One diagnosis case: the true disease plus its symptom evidence."""

    id: str
    disease: str
    explicit_symptoms: Mapping[str, bool]
    implicit_symptoms: Mapping[str, bool]

    def symptom_value(self, name: str) -> bool | None:
        """Truth value of a symptom in this goal, or None when absent."""
        if name in self.explicit_symptoms:
            return self.explicit_symptoms[name]
        if name in self.implicit_symptoms:
            return self.implicit_symptoms[name]
        return None

    def true_symptoms(self) -> set[str]:
        present = {s for s, v in self.explicit_symptoms.items() if v}
        present.update(s for s, v in self.implicit_symptoms.items() if v)
        return present

    def all_symptoms(self) -> set[str]:
        return set(self.explicit_symptoms) | set(self.implicit_symptoms)


@dataclass(frozen=True)
class Vocabulary:
    """Stable index maps for diseases, symptoms and greeting actions.

    The flat action space is ordered [greetings..., diseases..., symptoms...];
    the same ordering doubles as the node ordering of the symptom-disease
    graph. Indices are deterministic because disease and symptom lists are
    sorted lexicographically at construction.
    """

    diseases: tuple[str, ...]
    symptoms: tuple[str, ...]
    greetings: tuple[str, ...] = ("greet", "close")

    @property
    def num_greeting(self) -> int:
        return len(self.greetings)

    @property
    def num_diseases(self) -> int:
        return len(self.diseases)

    @property
    def num_symptoms(self) -> int:
        return len(self.symptoms)

    @property
    def num_actions(self) -> int:
        return self.num_greeting + self.num_diseases + self.num_symptoms

    @cached_property
    def action_names(self) -> tuple[str, ...]:
        return self.greetings + self.diseases + self.symptoms

    @cached_property
    def _disease_pos(self) -> dict[str, int]:
        return {d: i for i, d in enumerate(self.diseases)}

    @cached_property
    def _symptom_pos(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.symptoms)}

    def disease_pos(self, name: str) -> int:
        try:
            return self._disease_pos[name]
        except KeyError:
            raise CorpusError(f"unknown disease: {name!r}") from None

    def symptom_pos(self, name: str) -> int:
        try:
            return self._symptom_pos[name]
        except KeyError:
            raise CorpusError(f"unknown symptom: {name!r}") from None

    def has_symptom(self, name: str) -> bool:
        return name in self._symptom_pos

    def disease_action(self, name: str) -> int:
        return self.num_greeting + self.disease_pos(name)

    def symptom_action(self, name: str) -> int:
        return self.num_greeting + self.num_diseases + self.symptom_pos(name)

    def action_kind(self, action: int) -> str:
        if not 0 <= action < self.num_actions:
            raise CorpusError(f"action index out of range: {action}")
        if action < self.num_greeting:
            return "greeting"
        if action < self.num_greeting + self.num_diseases:
            return "disease"
        return "symptom"

    def action_name(self, action: int) -> str:
        self.action_kind(action)  # range check
        return self.action_names[action]

    def to_dict(self) -> dict:
        return {
            "diseases": list(self.diseases),
            "symptoms": list(self.symptoms),
            "greetings": list(self.greetings),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Vocabulary":
        return cls(
            diseases=tuple(data["diseases"]),
            symptoms=tuple(data["symptoms"]),
            greetings=tuple(data["greetings"]),
        )


@dataclass(frozen=True)
class CorpusCounts:
    """Per-corpus occurrence tallies, indexed by vocabulary position.

    All arrays follow the vocabulary's symptom/disease ordering. Occurrence is
    per dialogue (set semantics) and only counts true-valued symptoms.
    """

    total_dialogues: int
    symptom_dialogues: np.ndarray        # (N,)  dialogues containing symptom i
    co_occurrence: np.ndarray            # (N,N) dialogues containing both i and j
    disease_symptom: np.ndarray          # (N,M) true occurrences of i in disease j
    disease_totals: np.ndarray           # (M,)  column sums of disease_symptom
    symptom_disease_incidence: np.ndarray  # (N,) diseases where i occurs at least once


def _as_bool_map(raw, goal_label: str, field: str) -> dict[str, bool]:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise CorpusError(f"goal {goal_label}: {field} must be an object")
    out = {}
    for name, value in raw.items():
        if not isinstance(name, str) or not name:
            raise CorpusError(f"goal {goal_label}: bad symptom name in {field}")
        if not isinstance(value, bool):
            raise CorpusError(
                f"goal {goal_label}: symptom {name!r} in {field} must be true/false"
            )
        out[name] = value
    return out


def parse_goal(raw, fallback_label: str) -> UserGoal:
    """Validate one raw goal record; raises CorpusError naming the goal."""
    if not isinstance(raw, dict):
        raise CorpusError(f"goal {fallback_label}: record must be an object")
    goal_id = raw.get("id")
    label = goal_id if isinstance(goal_id, str) and goal_id else fallback_label
    if not isinstance(goal_id, str) or not goal_id:
        raise CorpusError(f"goal {label}: missing or empty id")
    disease = raw.get("disease")
    if not isinstance(disease, str) or not disease:
        raise CorpusError(f"goal {label}: missing or empty disease")
    explicit = _as_bool_map(raw.get("explicit_symptoms"), label, "explicit_symptoms")
    implicit = _as_bool_map(raw.get("implicit_symptoms"), label, "implicit_symptoms")
    for name in explicit.keys() & implicit.keys():
        if explicit[name] != implicit[name]:
            raise CorpusError(
                f"goal {label}: symptom {name!r} has conflicting explicit/implicit values"
            )
    return UserGoal(id=goal_id, disease=disease,
                    explicit_symptoms=explicit, implicit_symptoms=implicit)


def build_vocabulary(goals: Sequence[UserGoal], num_greeting: int = 2) -> Vocabulary:
    """Vocabulary covering exactly the diseases/symptoms present, sorted."""
    diseases = sorted({g.disease for g in goals})
    symptoms = sorted(set().union(*(g.all_symptoms() for g in goals)) if goals else set())
    return Vocabulary(
        diseases=tuple(diseases),
        symptoms=tuple(symptoms),
        greetings=greeting_names(num_greeting),
    )


def load_corpus(path, num_greeting: int = 2) -> tuple[list[UserGoal], Vocabulary]:
    """Load and validate a goal file; returns goals plus their vocabulary."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict) or "goals" not in data:
        raise CorpusError(f"{path}: expected an object with a 'goals' list")
    raw_goals = data["goals"]
    if not isinstance(raw_goals, list):
        raise CorpusError(f"{path}: 'goals' must be a list")
    if not raw_goals:
        raise CorpusError("empty corpus")
    goals = [parse_goal(raw, f"#{i}") for i, raw in enumerate(raw_goals)]
    seen: set[str] = set()
    for g in goals:
        if g.id in seen:
            raise CorpusError(f"goal {g.id}: duplicate id")
        seen.add(g.id)
    return goals, build_vocabulary(goals, num_greeting=num_greeting)


def save_corpus(goals: Iterable[UserGoal], path) -> None:
    """Write goals back out in the canonical goal-file schema."""
    payload = {
        "goals": [
            {
                "id": g.id,
                "disease": g.disease,
                "explicit_symptoms": dict(sorted(g.explicit_symptoms.items())),
                "implicit_symptoms": dict(sorted(g.implicit_symptoms.items())),
            }
            for g in goals
        ]
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n",
                          encoding="utf-8")


def tally_counts(goals: Sequence[UserGoal], vocab: Vocabulary) -> CorpusCounts:
    """Count symptom occurrences, co-occurrences and per-disease frequencies."""
    if not goals:
        raise CorpusError("empty corpus")
    n_sym = vocab.num_symptoms
    n_dis = vocab.num_diseases
    symptom_dialogues = np.zeros(n_sym, dtype=np.int64)
    co_occurrence = np.zeros((n_sym, n_sym), dtype=np.int64)
    disease_symptom = np.zeros((n_sym, n_dis), dtype=np.int64)

    for goal in goals:
        dis = vocab.disease_pos(goal.disease)
        present = np.array(
            sorted(vocab.symptom_pos(s) for s in goal.true_symptoms()), dtype=np.int64
        )
        if present.size:
            symptom_dialogues[present] += 1
            co_occurrence[np.ix_(present, present)] += 1
            disease_symptom[present, dis] += 1

    disease_totals = disease_symptom.sum(axis=0)
    incidence = (disease_symptom > 0).sum(axis=1)
    return CorpusCounts(
        total_dialogues=len(goals),
        symptom_dialogues=symptom_dialogues,
        co_occurrence=co_occurrence,
        disease_symptom=disease_symptom,
        disease_totals=disease_totals,
        symptom_disease_incidence=incidence.astype(np.int64),
    )
