"""deltadec: masked-prompt contrastive decoding with a QA evaluation harness."""

from .core import DecodeConfig, TokenSequence, argmax_token, softmax
from .masking import MaskPlan, apply_mask, select_mask_indices
from .backend import (
    NGramBackend,
    ScriptedBackend,
    Vocabulary,
    detokenize,
    tokenize,
    train_ngram,
)
from .decoder import DecodeResult, StepTrace, apc_head, decode_step, delta_combine, generate
from .metrics import EvalReport, QAPrediction, aggregate, exact_match, f1, normalize_answer
from .harness import QAExample, SweepGrid, build_prompt, load_dataset, run_eval, sweep

__version__ = "0.1.0"

__all__ = [
    "DecodeConfig", "TokenSequence", "argmax_token", "softmax",
    "MaskPlan", "apply_mask", "select_mask_indices",
    "NGramBackend", "ScriptedBackend", "Vocabulary", "tokenize", "detokenize", "train_ngram",
    "DecodeResult", "StepTrace", "apc_head", "decode_step", "delta_combine", "generate",
    "EvalReport", "QAPrediction", "aggregate", "exact_match", "f1", "normalize_answer",
    "QAExample", "SweepGrid", "build_prompt", "load_dataset", "run_eval", "sweep",
]
