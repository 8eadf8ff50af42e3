"""Synthetic diagnosis corpora for desk-scale experiments and tests.

Two families: a separable corpus where each disease carries its own
always-true marker symptoms plus shared noise, and a confusable pair of
diseases that overlap on most symptoms and differ only through rare
discriminators that almost never show up in the self-report.
"""

from __future__ import annotations

import numpy as np

from .corpus import UserGoal


def _goal(goal_id: str, disease: str, explicit: dict, implicit: dict) -> UserGoal:
    return UserGoal(id=goal_id, disease=disease,
                    explicit_symptoms=explicit, implicit_symptoms=implicit)


def separable_corpus(num_train: int = 200, num_test: int = 50, *,
                     num_diseases: int = 4, unique_per_disease: int = 2,
                     num_shared: int = 4, noise: float = 0.5,
                     seed: int = 0) -> tuple[list[UserGoal], list[UserGoal]]:
    """Diseases with unique always-true symptoms plus shared noisy ones.

    One unique marker lands in the self-report, the other stays implicit,
    so the true disease is already identifiable from the first turn.
    """
    rng = np.random.default_rng(seed)
    diseases = [f"disease_{d:02d}" for d in range(num_diseases)]
    unique = {
        d: [f"marker_{di:02d}_{u}" for u in range(unique_per_disease)]
        for di, d in enumerate(diseases)
    }
    shared = [f"common_{s:02d}" for s in range(num_shared)]

    def make_goal(idx: int, split: str) -> UserGoal:
        disease = diseases[int(rng.integers(num_diseases))]
        markers = list(unique[disease])
        first = int(rng.integers(len(markers)))
        explicit = {markers[first]: True}
        implicit = {m: True for i, m in enumerate(markers) if i != first}
        for s in shared:
            if rng.random() < noise:
                target = explicit if rng.random() < 0.5 else implicit
                target[s] = bool(rng.random() < 0.7)
        return _goal(f"{split}_{idx:04d}", disease, explicit, implicit)

    train = [make_goal(i, "train") for i in range(num_train)]
    test = [make_goal(i, "test") for i in range(num_test)]
    return train, test


def confusable_corpus(num_train: int = 160, num_test: int = 60, *,
                      num_shared: int = 12, num_decoys: int = 2,
                      seed: int = 0) -> tuple[list[UserGoal], list[UserGoal]]:
    """A confusable disease pair plus easy decoy diseases.

    The pair shares most of its symptoms (about 80% overlap) and the
    self-report only ever contains shared ones, so telling the two apart
    requires asking for a rare discriminator hidden among the implicit
    symptoms. The decoy diseases are trivially separable; they exist so the
    shared symptoms occur under several diseases, which makes their
    disease-edge weights much weaker than the discriminators' edges.
    Flattening all weights to 1 erases exactly that contrast.
    """
    rng = np.random.default_rng(seed)
    pair = ["illness_a", "illness_b"]
    decoys = [f"decoy_{c}" for c in "cdefgh"[:num_decoys]]
    shared = [f"overlap_{s:02d}" for s in range(num_shared)]
    discriminators = {"illness_a": "rare_sign_a", "illness_b": "rare_sign_b"}
    decoy_markers = {d: f"marker_{d[-1]}" for d in decoys}

    def pair_goal(idx: int, split: str) -> UserGoal:
        disease = pair[int(rng.integers(2))]
        other = pair[1 - pair.index(disease)]
        n_explicit = 2 + int(rng.integers(2))
        picks = rng.choice(num_shared, size=n_explicit, replace=False)
        explicit = {shared[int(p)]: True for p in picks}
        implicit = {discriminators[other]: False}
        if rng.random() < 0.95:
            implicit[discriminators[disease]] = True
        extra = rng.choice(num_shared, size=2, replace=False)
        for p in extra:
            implicit.setdefault(shared[int(p)], bool(rng.random() < 0.5))
        return _goal(f"{split}_{idx:04d}", disease, explicit, implicit)

    def decoy_goal(idx: int, split: str) -> UserGoal:
        disease = decoys[int(rng.integers(num_decoys))]
        explicit = {decoy_markers[disease]: True}
        implicit = {}
        # decoys also show a couple of the shared symptoms, spreading them
        # across more diseases and driving their idf down
        picks = rng.choice(num_shared, size=2, replace=False)
        for p in picks:
            implicit[shared[int(p)]] = bool(rng.random() < 0.6)
        return _goal(f"{split}_{idx:04d}", disease, explicit, implicit)

    def make_split(count: int, split: str) -> list[UserGoal]:
        goals = []
        for i in range(count):
            if i % 4 == 3:  # one decoy case for every three pair cases
                goals.append(decoy_goal(i, split))
            else:
                goals.append(pair_goal(i, split))
        return goals

    return make_split(num_train, "train"), make_split(num_test, "test")
