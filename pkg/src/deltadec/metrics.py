"""Answer scoring with SQuAD semantics.

Normalization is the standard recipe: lowercase, strip punctuation, drop
the articles a/an/the, collapse whitespace. Unanswerable examples score 1
iff the prediction normalizes to the empty string.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import DecodeConfig, DeltaError

_ARTICLES_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


class PredictionMismatch(DeltaError):
    """Predictions and dataset example ids do not line up one-to-one."""


class EmptyDataset(DeltaError):
    """Percentages are undefined over zero examples."""


@dataclass(frozen=True)
class QAPrediction:
    example_id: str
    text: str  # empty string means "no answer"


@dataclass(frozen=True)
class EvalReport:
    """Aggregated metrics; the HasAns/NoAns split is present only when the
    dataset actually contains unanswerable examples."""

    exact_match: float
    f1: float
    n_examples: int
    has_ans_em: float | None = None
    no_ans_em: float | None = None
    config_echo: DecodeConfig | None = None

    def to_dict(self) -> dict:
        return {
            "exact_match": self.exact_match,
            "f1": self.f1,
            "has_ans_em": self.has_ans_em,
            "no_ans_em": self.no_ans_em,
            "n_examples": self.n_examples,
            "config": self.config_echo.to_dict() if self.config_echo else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        cfg = d.get("config")
        return cls(
            exact_match=d["exact_match"],
            f1=d["f1"],
            n_examples=d["n_examples"],
            has_ans_em=d.get("has_ans_em"),
            no_ans_em=d.get("no_ans_em"),
            config_echo=DecodeConfig.from_dict(cfg) if cfg else None,
        )


def normalize_answer(text: str) -> str:
    text = text.lower()
    text = text.translate(_PUNCT_TABLE)
    text = _ARTICLES_RE.sub(" ", text)
    return " ".join(text.split())


def exact_match(pred: str, golds: Sequence[str]) -> int:
    norm_pred = normalize_answer(pred)
    if not golds:
        return int(norm_pred == "")
    return int(any(norm_pred == normalize_answer(g) for g in golds))


def f1(pred: str, golds: Sequence[str]) -> float:
    pred_tokens = normalize_answer(pred).split()
    if not golds:
        return float(not pred_tokens)
    best = 0.0
    for gold in golds:
        gold_tokens = normalize_answer(gold).split()
        if not pred_tokens or not gold_tokens:
            best = max(best, float(pred_tokens == gold_tokens))
            continue
        overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
        if overlap == 0:
            continue
        precision = overlap / len(pred_tokens)
        recall = overlap / len(gold_tokens)
        best = max(best, 2 * precision * recall / (precision + recall))
    return best


def aggregate(predictions: Iterable[QAPrediction], dataset) -> EvalReport:
    """Mean EM/F1 (x100) over the dataset, split by answerability.

    `dataset` is a sequence of harness QAExample records.
    """
    by_id = {}
    for p in predictions:
        if p.example_id in by_id:
            raise PredictionMismatch(f"duplicate prediction for id {p.example_id!r}")
        by_id[p.example_id] = p

    examples = list(dataset)
    if not examples:
        raise EmptyDataset("cannot aggregate metrics over zero examples")

    em_scores, f1_scores = [], []
    has_ans_em, no_ans_em = [], []
    for ex in examples:
        pred = by_id.pop(ex.id, None)
        if pred is None:
            raise PredictionMismatch(f"missing prediction for id {ex.id!r}")
        em = exact_match(pred.text, ex.answers)
        em_scores.append(em)
        f1_scores.append(f1(pred.text, ex.answers))
        (no_ans_em if ex.is_impossible else has_ans_em).append(em)
    if by_id:
        extra = sorted(by_id)[0]
        raise PredictionMismatch(f"prediction for unknown id {extra!r}")

    has_split = bool(no_ans_em)
    return EvalReport(
        exact_match=100.0 * sum(em_scores) / len(em_scores),
        f1=100.0 * sum(f1_scores) / len(f1_scores),
        n_examples=len(examples),
        has_ans_em=100.0 * sum(has_ans_em) / len(has_ans_em) if has_split and has_ans_em else None,
        no_ans_em=100.0 * sum(no_ans_em) / len(no_ans_em) if has_split else None,
    )
