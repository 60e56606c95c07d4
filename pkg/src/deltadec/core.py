"""Shared domain types and numeric primitives.

All logit arithmetic is done in 64-bit floats regardless of what a backend
stores internally; this keeps the contrast arithmetic exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

# A token is a plain non-negative int index into the active vocabulary.
TokenId = int


class DeltaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidLogits(DeltaError):
    """A logit vector contained a NaN or infinite entry."""


class InvalidInput(DeltaError):
    """An operation received a structurally invalid argument."""


class ConfigError(DeltaError):
    """A decode configuration violates its invariants."""


@dataclass(frozen=True)
class TokenSequence:
    """The growing context: prompt tokens followed by generated tokens."""

    tokens: tuple[TokenId, ...]
    prompt_len: int

    def __post_init__(self):
        if not 0 <= self.prompt_len <= len(self.tokens):
            raise InvalidInput(
                f"prompt_len {self.prompt_len} out of range for "
                f"{len(self.tokens)} tokens"
            )
        if any(t < 0 for t in self.tokens):
            raise InvalidInput("token ids must be non-negative")

    @classmethod
    def prompt(cls, tokens: Iterable[TokenId]) -> "TokenSequence":
        """A sequence that is all prompt (nothing generated yet)."""
        toks = tuple(tokens)
        return cls(tokens=toks, prompt_len=len(toks))

    @property
    def prompt_tokens(self) -> tuple[TokenId, ...]:
        return self.tokens[: self.prompt_len]

    @property
    def generated_tokens(self) -> tuple[TokenId, ...]:
        return self.tokens[self.prompt_len :]

    def append(self, token: TokenId) -> "TokenSequence":
        return TokenSequence(self.tokens + (token,), self.prompt_len)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class DecodeConfig:
    """Every knob of the contrastive decode loop.

    Defaults follow the fixed experimental setting: r_mask=0.7, alpha=0.3,
    beta=0.1, temperature=1, mask token = eos.
    """

    alpha: float = 0.3
    r_mask: float = 0.7
    beta: float = 0.1
    temperature: float = 1.0
    mask_token: TokenId = 0
    seed: int = 0
    max_new_tokens: int = 32
    stop_tokens: frozenset[TokenId] = field(default_factory=frozenset)
    remask_each_step: bool = False
    mask_generated: bool = False
    mode: str = "greedy"  # "greedy" | "sample"

    def validate(self) -> "DecodeConfig":
        for name in ("alpha", "r_mask", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if self.max_new_tokens < 1:
            raise ConfigError(
                f"max_new_tokens must be >= 1, got {self.max_new_tokens}"
            )
        if self.mode not in ("greedy", "sample"):
            raise ConfigError(f"mode must be 'greedy' or 'sample', got {self.mode!r}")
        if self.mask_token < 0:
            raise ConfigError(f"mask_token must be a valid token id, got {self.mask_token}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        return self

    def with_overrides(self, **kwargs) -> "DecodeConfig":
        if "stop_tokens" in kwargs and kwargs["stop_tokens"] is not None:
            kwargs["stop_tokens"] = frozenset(kwargs["stop_tokens"])
        return replace(self, **kwargs).validate()

    def to_dict(self) -> dict:
        d = {
            "alpha": self.alpha,
            "r_mask": self.r_mask,
            "beta": self.beta,
            "temperature": self.temperature,
            "mask_token": self.mask_token,
            "seed": self.seed,
            "max_new_tokens": self.max_new_tokens,
            "stop_tokens": sorted(self.stop_tokens),
            "remask_each_step": self.remask_each_step,
            "mask_generated": self.mask_generated,
            "mode": self.mode,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DecodeConfig":
        d = dict(d)
        if "stop_tokens" in d:
            d["stop_tokens"] = frozenset(d["stop_tokens"])
        return cls(**d).validate()


def as_logits(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Coerce to a float64 logit vector, rejecting non-finite entries."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInput(f"logit vector must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidLogits("logit vector contains non-finite entries")
    return arr


def softmax(logits, temperature: float = 1.0, *, allow_neg_inf: bool = False) -> np.ndarray:
    """Temperature softmax with max-subtraction for stability.

    With allow_neg_inf, entries of -inf are permitted and map to exactly
    zero probability (used after plausibility filtering).
    """
    if temperature <= 0:
        raise InvalidInput(f"temperature must be > 0, got {temperature}")
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInput("softmax requires a non-empty 1-D vector")
    if allow_neg_inf:
        finite_ok = ~np.isnan(arr) & (arr < np.inf)
        if not np.all(finite_ok):
            raise InvalidLogits("logit vector contains NaN or +inf entries")
        if not np.any(arr > -np.inf):
            raise InvalidLogits("all logits are -inf")
    elif not np.all(np.isfinite(arr)):
        raise InvalidLogits("logit vector contains non-finite entries")
    scaled = arr / temperature
    shifted = scaled - np.max(scaled)
    exp = np.exp(shifted)
    return exp / np.sum(exp)


def argmax_token(logits) -> TokenId:
    """Index of the max entry; ties break toward the lowest token id."""
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInput("argmax_token requires a non-empty 1-D vector")
    return int(np.argmax(arr))
