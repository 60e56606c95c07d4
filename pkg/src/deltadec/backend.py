"""Logit sources: the backend abstraction plus two desk-scale implementations.

A backend is any pure function from a token sequence to a logit vector over
a fixed vocabulary. The n-gram backend (add-k smoothing with longest-suffix
backoff) is controllable enough to construct prior-vs-context conflicts on
purpose; the scripted backend is an exact lookup table for tests.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, runtime_checkable

import numpy as np

from .core import DeltaError, TokenId, TokenSequence, as_logits

EOS_STRING = "</s>"
UNK_STRING = "<unk>"


class InvalidCorpus(DeltaError):
    """The training corpus is empty or the n-gram parameters are invalid."""


class ModelFormatError(DeltaError):
    """A persisted backend file does not match the expected schema."""


@dataclass(frozen=True)
class Vocabulary:
    id_to_string: tuple[str, ...]
    string_to_id: dict[str, TokenId]
    eos: TokenId
    unk: TokenId

    @classmethod
    def build(cls, words: Iterable[str]) -> "Vocabulary":
        """Vocabulary over the given words plus the eos/unk specials.

        Word order is sorted for reproducibility; specials come first.
        """
        uniq = sorted(set(words) - {EOS_STRING, UNK_STRING})
        id_to_string = (EOS_STRING, UNK_STRING, *uniq)
        string_to_id = {s: i for i, s in enumerate(id_to_string)}
        return cls(id_to_string=id_to_string, string_to_id=string_to_id, eos=0, unk=1)

    def __len__(self) -> int:
        return len(self.id_to_string)

    def id_of(self, word: str) -> TokenId:
        return self.string_to_id.get(word, self.unk)

    def string_of(self, token: TokenId) -> str:
        return self.id_to_string[token]


def tokenize(text: str, vocab: Vocabulary) -> TokenSequence:
    """Lowercased whitespace split; unknown words map to unk."""
    words = text.lower().split()
    return TokenSequence.prompt(vocab.id_of(w) for w in words)


def detokenize(tokens: Iterable[TokenId], vocab: Vocabulary) -> str:
    return " ".join(vocab.string_of(t) for t in tokens)


@runtime_checkable
class LogitSource(Protocol):
    """Anything that maps a token sequence to next-token logits."""

    def logits(self, seq: TokenSequence) -> np.ndarray: ...

    def vocab_size(self) -> int: ...


@dataclass(frozen=True)
class ScriptedBackend:
    """Exact table lookup on the full token sequence; default when absent."""

    table: dict[tuple[TokenId, ...], np.ndarray]
    default: np.ndarray
    vocab: Vocabulary | None = None

    def __post_init__(self):
        n = len(self.default)
        for key, vec in self.table.items():
            if len(vec) != n:
                raise DeltaError(
                    f"scripted vector for key {key} has length {len(vec)}, "
                    f"expected {n}"
                )

    def logits(self, seq: TokenSequence) -> np.ndarray:
        vec = self.table.get(seq.tokens, self.default)
        return as_logits(np.array(vec, dtype=np.float64))

    def vocab_size(self) -> int:
        return len(self.default)

    @classmethod
    def from_json(cls, doc: dict) -> "ScriptedBackend":
        """Load from a JSON document keyed by space-joined token strings."""
        try:
            vocab = Vocabulary.build(doc["vocab"])
            default = as_logits(doc["default"])
            table = {
                tuple(vocab.id_of(w) for w in key.split()): as_logits(vec)
                for key, vec in doc.get("table", {}).items()
            }
        except (KeyError, TypeError) as exc:
            raise ModelFormatError(f"bad scripted-backend document: {exc}") from exc
        if len(default) != len(vocab):
            raise ModelFormatError(
                f"default vector length {len(default)} != vocab size {len(vocab)}"
            )
        return cls(table=table, default=default, vocab=vocab)

    @classmethod
    def load(cls, path: str | Path) -> "ScriptedBackend":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class NGramBackend:
    """Add-k smoothed n-gram model with longest-suffix backoff.

    P(w | c) = (count(c, w) + k) / (count(c) + k * |V|), where c backs off
    to its longest recorded suffix (ultimately the empty context).
    """

    order: int
    smoothing_k: float
    vocab: Vocabulary
    counts: dict[tuple[TokenId, ...], Counter] = field(repr=False, default_factory=dict)
    context_totals: dict[tuple[TokenId, ...], int] = field(repr=False, default_factory=dict)

    def vocab_size(self) -> int:
        return len(self.vocab)

    def _backoff_context(self, seq: TokenSequence) -> tuple[TokenId, ...]:
        ctx = tuple(seq.tokens[-(self.order - 1):]) if self.order > 1 else ()
        while ctx and ctx not in self.counts:
            ctx = ctx[1:]
        return ctx

    def conditional(self, seq: TokenSequence) -> np.ndarray:
        """Smoothed next-token distribution after backoff."""
        ctx = self._backoff_context(seq)
        v = len(self.vocab)
        k = self.smoothing_k
        probs = np.full(v, k, dtype=np.float64)
        ctx_counts = self.counts.get(ctx, Counter())
        for token, n in ctx_counts.items():
            probs[token] += n
        probs /= self.context_totals.get(ctx, 0) + k * v
        return probs

    def logits(self, seq: TokenSequence) -> np.ndarray:
        return np.log(self.conditional(seq))

    def to_json(self) -> dict:
        return {
            "format": "ngram-lm",
            "version": 1,
            "order": self.order,
            "smoothing_k": self.smoothing_k,
            "vocab": list(self.vocab.id_to_string),
            "counts": {
                " ".join(self.vocab.string_of(t) for t in ctx): {
                    self.vocab.string_of(w): n for w, n in sorted(c.items())
                }
                for ctx, c in self.counts.items()
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "NGramBackend":
        if doc.get("format") != "ngram-lm" or doc.get("version") != 1:
            raise ModelFormatError("not a version-1 ngram-lm document")
        try:
            id_to_string = tuple(doc["vocab"])
            string_to_id = {s: i for i, s in enumerate(id_to_string)}
            vocab = Vocabulary(
                id_to_string=id_to_string,
                string_to_id=string_to_id,
                eos=string_to_id[EOS_STRING],
                unk=string_to_id[UNK_STRING],
            )
            counts: dict[tuple[TokenId, ...], Counter] = {}
            for ctx_key, successors in doc["counts"].items():
                ctx = tuple(string_to_id[w] for w in ctx_key.split())
                counts[ctx] = Counter(
                    {string_to_id[w]: int(n) for w, n in successors.items()}
                )
            model = cls(
                order=int(doc["order"]),
                smoothing_k=float(doc["smoothing_k"]),
                vocab=vocab,
                counts=counts,
                context_totals={c: sum(cnt.values()) for c, cnt in counts.items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"bad ngram-lm document: {exc}") from exc
        return model

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "NGramBackend":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def train_ngram(
    corpus: Iterable[str],
    order: int = 3,
    smoothing_k: float = 0.01,
) -> NGramBackend:
    """Count all n-grams up to `order` over the corpus lines.

    Each line is one training sentence; an eos token is appended so the
    model learns where answers end.
    """
    lines = [ln for ln in corpus if ln.strip()]
    if not lines:
        raise InvalidCorpus("training corpus is empty")
    if order < 1:
        raise InvalidCorpus(f"order must be >= 1, got {order}")
    if smoothing_k <= 0:
        raise InvalidCorpus(f"smoothing_k must be > 0, got {smoothing_k}")

    words = [w for ln in lines for w in ln.lower().split()]
    vocab = Vocabulary.build(words)

    counts: dict[tuple[TokenId, ...], Counter] = {}
    for ln in lines:
        tokens = [vocab.id_of(w) for w in ln.lower().split()] + [vocab.eos]
        for t, token in enumerate(tokens):
            for ctx_len in range(min(order - 1, t) + 1):
                ctx = tuple(tokens[t - ctx_len : t])
                counts.setdefault(ctx, Counter())[token] += 1

    return NGramBackend(
        order=order,
        smoothing_k=smoothing_k,
        vocab=vocab,
        counts=counts,
        context_totals={c: sum(cnt.values()) for c, cnt in counts.items()},
    )


def train_ngram_from_file(path: str | Path, order: int = 3, smoothing_k: float = 0.01) -> NGramBackend:
    with open(path, "r", encoding="utf-8") as fh:
        return train_ngram(fh.readlines(), order=order, smoothing_k=smoothing_k)
