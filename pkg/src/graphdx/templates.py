"""Fixed-template action wording.

Every action index maps to exactly one sentence and back; the mapping is a
pure lookup in both directions, so action -> text -> action round-trips
exactly.
"""

from __future__ import annotations

from .corpus import Vocabulary

_GREETING_TEXTS = {
    "greet": "Hello! Please tell me what is bothering you.",
    "close": "Thank you for the information. Take care!",
}


def action_text(vocab: Vocabulary, action: int) -> str:
    kind = vocab.action_kind(action)
    name = vocab.action_name(action)
    if kind == "greeting":
        return _GREETING_TEXTS.get(name, f"[{name}]")
    if kind == "symptom":
        return f"Do you have {name}?"
    return f"You may have {name}."


def _text_table(vocab: Vocabulary) -> dict[str, int]:
    table: dict[str, int] = {}
    for action in range(vocab.num_actions):
        text = action_text(vocab, action)
        if text in table:
            raise ValueError(f"template collision for text {text!r}")
        table[text] = action
    return table


def parse_action_text(vocab: Vocabulary, text: str) -> int:
    """Exact inverse of action_text; raises KeyError for unknown wording."""
    return _text_table(vocab)[text]
