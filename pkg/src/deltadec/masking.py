"""Random token masking of the input context.

A fraction r_mask of the eligible region is replaced by the MASK token:
exactly floor(r_mask * eligible_len) positions, sampled uniformly without
replacement from a seeded stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DeltaError, TokenId, TokenSequence


class InvalidMaskPlan(DeltaError):
    """A mask plan references positions outside the target sequence."""


@dataclass(frozen=True)
class MaskPlan:
    """The chosen mask positions for one (or every) decode step."""

    indices: frozenset[int]
    mask_token: TokenId
    eligible_len: int

    def __post_init__(self):
        if any(i < 0 or i >= self.eligible_len for i in self.indices):
            raise InvalidMaskPlan(
                f"mask indices must lie in [0, {self.eligible_len})"
            )

    def to_dict(self) -> dict:
        return {
            "indices": sorted(self.indices),
            "mask_token": self.mask_token,
            "eligible_len": self.eligible_len,
        }


def select_mask_indices(
    seq: TokenSequence,
    r_mask: float,
    mask_token: TokenId,
    rng: np.random.Generator,
    mask_generated: bool = False,
) -> MaskPlan:
    """Pick floor(r_mask * n) distinct positions from the eligible region.

    The eligible region is the prompt only unless mask_generated is set, in
    which case the whole sequence may be masked.
    """
    if not 0.0 <= r_mask <= 1.0:
        raise InvalidMaskPlan(f"r_mask must be in [0, 1], got {r_mask}")
    eligible_len = len(seq) if mask_generated else seq.prompt_len
    m = math.floor(r_mask * eligible_len)
    if m == 0:
        chosen: frozenset[int] = frozenset()
    else:
        perm = rng.permutation(eligible_len)
        chosen = frozenset(int(i) for i in perm[:m])
    return MaskPlan(indices=chosen, mask_token=mask_token, eligible_len=eligible_len)


def apply_mask(seq: TokenSequence, plan: MaskPlan) -> TokenSequence:
    """Replace the planned positions with the MASK token; all else untouched."""
    if plan.indices and max(plan.indices) >= len(seq):
        raise InvalidMaskPlan(
            f"plan index {max(plan.indices)} out of range for sequence of "
            f"length {len(seq)}"
        )
    tokens = tuple(
        plan.mask_token if i in plan.indices else t
        for i, t in enumerate(seq.tokens)
    )
    return TokenSequence(tokens=tokens, prompt_len=seq.prompt_len)
