"""Synthetic desk-scale QA benchmark with planted prior-vs-context conflicts.

The corpus gives each object a dominant "prior" attribute (e.g. bananas are
yellow) and a modifier context under which a rarer attribute is correct
(moldy bananas are brown) but the counts still favor the prior. A plain
n-gram decode follows the prior and answers wrong on conflict examples;
subtracting the masked-context logits recovers the contextual answer.
"""

from __future__ import annotations

from dataclasses import dataclass

from .harness import QAExample

QUESTION = "what color is"
# Prompts must end with the context words, so the question leads.
SYNTH_TEMPLATE = "{question} {context}"


@dataclass(frozen=True)
class Family:
    obj: str
    prior_attr: str      # globally dominant attribute
    modifier: str        # context word flipping the correct answer
    context_attr: str    # correct attribute under the modifier
    benign: str = "fresh"


FAMILIES = (
    Family("banana", "yellow", "moldy", "brown"),
    Family("apple", "red", "rotten", "black"),
    Family("leaf", "green", "dried", "orange"),
    Family("cloud", "white", "stormy", "gray"),
    Family("wall", "beige", "burnt", "charcoal"),
)


def build_corpus(families: tuple[Family, ...] = FAMILIES) -> list[str]:
    """Training lines whose trigram counts encode the planted conflicts.

    Per family: a heavy global prior, a benign context agreeing with the
    prior, and a modifier context where the prior attribute still outcounts
    the correct contextual one (2 vs 1).
    """
    lines: list[str] = []
    for f in families:
        lines += [f"a {f.obj} {f.prior_attr}"] * 30
        lines += [f"a {f.benign} {f.obj} {f.prior_attr}"] * 5
        lines += [f"a {f.modifier} {f.obj} {f.prior_attr}"] * 2
        lines += [f"a {f.modifier} {f.obj} {f.context_attr}"] * 1
    return lines


def build_dataset(
    n_examples: int = 50,
    families: tuple[Family, ...] = FAMILIES,
) -> tuple[list[QAExample], set[str]]:
    """n_examples QA records, half of them conflicts; returns (examples,
    conflict ids)."""
    examples: list[QAExample] = []
    conflict_ids: set[str] = set()
    for i in range(n_examples):
        f = families[(i // 2) % len(families)]
        if i % 2 == 0:
            ex = QAExample(
                id=f"conflict-{i:03d}",
                context=f"a {f.modifier} {f.obj}",
                question=QUESTION,
                answers=(f.context_attr,),
            )
            conflict_ids.add(ex.id)
        else:
            ex = QAExample(
                id=f"plain-{i:03d}",
                context=f"a {f.benign} {f.obj}",
                question=QUESTION,
                answers=(f.prior_attr,),
            )
        examples.append(ex)
    return examples, conflict_ids
