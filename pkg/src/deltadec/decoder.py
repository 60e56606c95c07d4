"""The contrastive decode loop.

Per step: score the context and its masked counterpart, combine as
(1 + alpha) * original - alpha * masked, keep only tokens whose baseline
probability clears the adaptive plausibility threshold, then pick greedily
or sample from the filtered temperature softmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DecodeConfig,
    DeltaError,
    InvalidInput,
    TokenId,
    TokenSequence,
    argmax_token,
    as_logits,
    softmax,
)
from .backend import LogitSource, detokenize
from .masking import MaskPlan, apply_mask, select_mask_indices
from .rng import DOMAIN_MASK, DOMAIN_SAMPLE, make_rng


@dataclass(frozen=True)
class StepTrace:
    """Everything needed to audit or replay one decode step."""

    step: int
    original_logits: np.ndarray
    masked_logits: np.ndarray
    combined_logits: np.ndarray
    head_set: frozenset[TokenId]
    distribution: np.ndarray
    chosen: TokenId
    mask_plan: MaskPlan

    def to_dict(self, max_traced_vocab: int | None = None) -> dict:
        """JSON form; logit vectors are elided above max_traced_vocab."""
        elide = max_traced_vocab is not None and len(self.original_logits) > max_traced_vocab
        d = {
            "step": self.step,
            "head_set": sorted(self.head_set),
            "chosen": self.chosen,
            "mask_plan": self.mask_plan.to_dict(),
        }
        if not elide:
            d["original_logits"] = self.original_logits.tolist()
            d["masked_logits"] = self.masked_logits.tolist()
            d["combined_logits"] = [
                None if x == -np.inf else x for x in self.combined_logits.tolist()
            ]
            d["distribution"] = self.distribution.tolist()
        return d


@dataclass(frozen=True)
class DecodeResult:
    sequence: TokenSequence
    text: str
    traces: tuple[StepTrace, ...]
    stop_reason: str  # "stop_token" | "max_tokens"

    def to_dict(self, include_trace: bool = False, max_traced_vocab: int | None = None) -> dict:
        d = {
            "tokens": list(self.sequence.generated_tokens),
            "text": self.text,
            "stop_reason": self.stop_reason,
        }
        if include_trace:
            d["trace"] = [t.to_dict(max_traced_vocab) for t in self.traces]
        return d


def delta_combine(original, masked, alpha: float) -> np.ndarray:
    """Elementwise (1 + alpha) * original - alpha * masked."""
    orig = as_logits(original)
    msk = as_logits(masked)
    if orig.shape != msk.shape:
        raise InvalidInput(
            f"logit length mismatch: {orig.shape[0]} vs {msk.shape[0]}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInput(f"alpha must be in [0, 1], got {alpha}")
    return (1.0 + alpha) * orig - alpha * msk


def apc_head(original, beta: float) -> frozenset[TokenId]:
    """Tokens whose baseline probability is >= beta * the max probability.

    The threshold is computed from the unmasked distribution at T=1, before
    any temperature scaling, so head membership is temperature-independent.
    """
    if not 0.0 <= beta <= 1.0:
        raise InvalidInput(f"beta must be in [0, 1], got {beta}")
    probs = softmax(as_logits(original), temperature=1.0)
    threshold = beta * np.max(probs)
    return frozenset(int(i) for i in np.flatnonzero(probs >= threshold))


def decode_step(
    seq: TokenSequence,
    config: DecodeConfig,
    source: LogitSource,
    plan: MaskPlan,
    rng: np.random.Generator | None = None,
) -> StepTrace:
    """One contrastive step over the current context."""
    if len(seq) == 0:
        raise InvalidInput("cannot decode from an empty sequence")
    original = as_logits(source.logits(seq))
    masked = as_logits(source.logits(apply_mask(seq, plan)))
    combined = delta_combine(original, masked, config.alpha)
    head = apc_head(original, config.beta)
    if not head:
        raise DeltaError("plausibility head is empty; beta must be <= 1")

    filtered = combined.copy()
    excluded = np.ones(len(filtered), dtype=bool)
    excluded[list(head)] = False
    filtered[excluded] = -np.inf
    distribution = softmax(filtered, config.temperature, allow_neg_inf=True)

    if config.mode == "greedy":
        chosen = argmax_token(filtered)
    else:
        if rng is None:
            raise InvalidInput("sample mode requires an rng stream")
        cdf = np.cumsum(distribution)
        chosen = int(np.searchsorted(cdf, rng.random(), side="right"))
        chosen = min(chosen, len(distribution) - 1)

    return StepTrace(
        step=len(seq.generated_tokens),
        original_logits=original,
        masked_logits=masked,
        combined_logits=filtered,
        head_set=head,
        distribution=distribution,
        chosen=chosen,
        mask_plan=plan,
    )


def generate(
    prompt: TokenSequence,
    config: DecodeConfig,
    source: LogitSource,
) -> DecodeResult:
    """Autoregressive generation until a stop token or max_new_tokens.

    The mask plan is drawn once from the seed by default; with
    remask_each_step each step draws a fresh plan from a (seed, step)
    stream.
    """
    config.validate()
    if prompt.prompt_len != len(prompt):
        raise InvalidInput("prompt sequence must not contain generated tokens")

    sample_rng = make_rng(config.seed, DOMAIN_SAMPLE)

    def plan_for(step: int, seq: TokenSequence) -> MaskPlan:
        path = (DOMAIN_MASK, step) if config.remask_each_step else (DOMAIN_MASK,)
        return select_mask_indices(
            seq,
            config.r_mask,
            config.mask_token,
            make_rng(config.seed, *path),
            mask_generated=config.mask_generated,
        )

    fixed_plan = None if config.remask_each_step else plan_for(0, prompt)

    seq = prompt
    traces: list[StepTrace] = []
    stop_reason = "max_tokens"
    for step in range(config.max_new_tokens):
        plan = plan_for(step, seq) if config.remask_each_step else fixed_plan
        trace = decode_step(seq, config, source, plan, sample_rng)
        if trace.chosen in config.stop_tokens:
            stop_reason = "stop_token"
            break
        seq = seq.append(trace.chosen)
        traces.append(trace)

    vocab = getattr(source, "vocab", None)
    text = detokenize(seq.generated_tokens, vocab) if vocab is not None else ""
    return DecodeResult(
        sequence=seq,
        text=text,
        traces=tuple(traces),
        stop_reason=stop_reason,
    )
