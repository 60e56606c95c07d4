"""Evaluation harness: dataset ingestion, baseline-vs-delta runs, sweeps,
and report emission.

Datasets are JSON-lines files with records
{id, context, question, answers, is_impossible}. Each example decodes with
a seed derived from (run seed, example id) so parallel and serial runs
produce identical reports.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .backend import LogitSource, tokenize
from .core import DecodeConfig, DeltaError
from .decoder import DecodeResult, generate
from .metrics import EvalReport, QAPrediction, aggregate
from .rng import derive_seed

DEFAULT_TEMPLATE = "Context: {context}\nQuestion: {question}\nAnswer:"
DEFAULT_ABSTAIN = "no answer"

CSV_COLUMNS = ["dataset", "mode", "name", "exact_match", "f1", "has_ans_em", "no_ans_em", "r_mask", "alpha"]


class DatasetError(DeltaError):
    """A dataset file is malformed or violates an example invariant."""


class TemplateError(DeltaError):
    """A prompt template is missing a required placeholder."""


@dataclass(frozen=True)
class QAExample:
    id: str
    context: str
    question: str
    answers: tuple[str, ...]
    is_impossible: bool = False

    def __post_init__(self):
        if self.is_impossible and self.answers:
            raise DatasetError(
                f"example {self.id!r} is marked impossible but has answers"
            )


@dataclass(frozen=True)
class SweepGrid:
    r_mask_values: tuple[float, ...]
    alpha_values: tuple[float, ...]
    fixed: DecodeConfig

    def __post_init__(self):
        for v in (*self.r_mask_values, *self.alpha_values):
            if not 0.0 <= v <= 1.0:
                raise DeltaError(f"sweep value {v} outside [0, 1]")
        if not self.r_mask_values or not self.alpha_values:
            raise DeltaError("sweep grid must have at least one cell")

    @classmethod
    def default(cls, fixed: DecodeConfig) -> "SweepGrid":
        return cls(
            r_mask_values=(0.3, 0.5, 0.7),
            alpha_values=(0.1, 0.2, 0.3, 0.4, 0.5),
            fixed=fixed,
        )

    @classmethod
    def parse(cls, spec: str, fixed: DecodeConfig) -> "SweepGrid":
        """Parse a grid spec like "0.3,0.5,0.7x0.1,0.2,0.3,0.4,0.5"."""
        try:
            r_part, a_part = spec.split("x")
            r_values = tuple(float(v) for v in r_part.split(","))
            a_values = tuple(float(v) for v in a_part.split(","))
        except ValueError as exc:
            raise DeltaError(f"malformed grid spec {spec!r}: expected "
                             "'r1,r2,...xa1,a2,...'") from exc
        return cls(r_mask_values=r_values, alpha_values=a_values, fixed=fixed)


def load_dataset(path: str | Path) -> list[QAExample]:
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                examples.append(
                    QAExample(
                        id=str(rec["id"]),
                        context=rec.get("context", ""),
                        question=rec["question"],
                        answers=tuple(rec.get("answers", [])),
                        is_impossible=bool(rec.get("is_impossible", False)),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DatasetError(f"{path}:{lineno}: malformed record: {exc}") from exc
    return examples


def save_dataset(examples: Sequence[QAExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(dataclasses.asdict(ex), sort_keys=True) + "\n")


def build_prompt(example: QAExample, template: str = DEFAULT_TEMPLATE) -> str:
    for placeholder in ("{context}", "{question}"):
        if placeholder not in template:
            raise TemplateError(f"template missing {placeholder} placeholder")
    return template.format(context=example.context, question=example.question)


def extract_prediction(result: DecodeResult, abstain_string: str = DEFAULT_ABSTAIN) -> str:
    """Generation text, cut at the first line break, abstention mapped to ''."""
    text = result.text.split("\n")[0].strip()
    if text.lower() == abstain_string.lower():
        return ""
    return text


def _decode_example(
    example: QAExample,
    config: DecodeConfig,
    source: LogitSource,
    template: str,
) -> DecodeResult:
    prompt_text = build_prompt(example, template)
    prompt = tokenize(prompt_text, source.vocab)
    cfg = config.with_overrides(seed=derive_seed(config.seed, example.id))
    return generate(prompt, cfg, source)


def evaluate_config(
    dataset: Sequence[QAExample],
    config: DecodeConfig,
    source: LogitSource,
    template: str = DEFAULT_TEMPLATE,
    abstain_string: str = DEFAULT_ABSTAIN,
    workers: int = 1,
) -> EvalReport:
    """Decode every example under one config and aggregate the metrics."""
    def run(ex: QAExample) -> QAPrediction:
        try:
            result = _decode_example(ex, config, source, template)
        except DeltaError as exc:
            raise DeltaError(f"backend failure on example {ex.id!r}: {exc}") from exc
        return QAPrediction(example_id=ex.id, text=extract_prediction(result, abstain_string))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            predictions = list(pool.map(run, dataset))
    else:
        predictions = [run(ex) for ex in dataset]
    report = aggregate(predictions, dataset)
    return dataclasses.replace(report, config_echo=config)


def run_eval(
    dataset: Sequence[QAExample],
    baseline_cfg: DecodeConfig,
    delta_cfg: DecodeConfig,
    source: LogitSource,
    template: str = DEFAULT_TEMPLATE,
    abstain_string: str = DEFAULT_ABSTAIN,
    workers: int = 1,
) -> tuple[EvalReport, EvalReport]:
    """Baseline (alpha must be 0) and delta reports over the same dataset."""
    if baseline_cfg.alpha != 0.0:
        raise DeltaError(f"baseline config must have alpha=0, got {baseline_cfg.alpha}")
    if baseline_cfg.seed != delta_cfg.seed or baseline_cfg.temperature != delta_cfg.temperature:
        raise DeltaError("baseline and delta configs must share seed and temperature")
    baseline = evaluate_config(dataset, baseline_cfg, source, template, abstain_string, workers)
    delta = evaluate_config(dataset, delta_cfg, source, template, abstain_string, workers)
    return baseline, delta


def sweep(
    dataset: Sequence[QAExample],
    grid: SweepGrid,
    source: LogitSource,
    template: str = DEFAULT_TEMPLATE,
    abstain_string: str = DEFAULT_ABSTAIN,
    workers: int = 1,
) -> dict[tuple[float, float], EvalReport]:
    """One delta report per (r_mask, alpha) cell, keyed by both values."""
    reports = {}
    for r in grid.r_mask_values:
        for a in grid.alpha_values:
            cfg = grid.fixed.with_overrides(r_mask=r, alpha=a)
            reports[(r, a)] = evaluate_config(
                dataset, cfg, source, template, abstain_string, workers
            )
    return reports


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.5f}"


def report_rows(
    reports: Sequence[tuple[str, str, str, EvalReport]] | dict[tuple[float, float], EvalReport],
    dataset_name: str = "",
) -> list[dict]:
    """Flatten named reports or a sweep matrix into ordered CSV-ready rows."""
    rows = []
    if isinstance(reports, dict):
        for (r, a) in sorted(reports):
            rep = reports[(r, a)]
            rows.append({
                "dataset": dataset_name,
                "mode": rep.config_echo.mode if rep.config_echo else "",
                "name": "delta",
                "exact_match": _fmt(rep.exact_match),
                "f1": _fmt(rep.f1),
                "has_ans_em": _fmt(rep.has_ans_em),
                "no_ans_em": _fmt(rep.no_ans_em),
                "r_mask": f"{r}",
                "alpha": f"{a}",
            })
    else:
        for ds, mode, name, rep in reports:
            rows.append({
                "dataset": ds,
                "mode": mode,
                "name": name,
                "exact_match": _fmt(rep.exact_match),
                "f1": _fmt(rep.f1),
                "has_ans_em": _fmt(rep.has_ans_em),
                "no_ans_em": _fmt(rep.no_ans_em),
                "r_mask": _fmt(rep.config_echo.r_mask) if rep.config_echo else "",
                "alpha": _fmt(rep.config_echo.alpha) if rep.config_echo else "",
            })
    return rows


def emit_report(reports, fmt: str, path: str | Path, dataset_name: str = "") -> None:
    """Write reports as CSV rows or a JSON document with deterministic order."""
    path = Path(path)
    if fmt == "csv":
        rows = report_rows(reports, dataset_name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    elif fmt == "json":
        if isinstance(reports, dict):
            doc = [
                {"r_mask": r, "alpha": a, "report": reports[(r, a)].to_dict()}
                for (r, a) in sorted(reports)
            ]
        else:
            doc = [
                {"dataset": ds, "mode": mode, "name": name, "report": rep.to_dict()}
                for ds, mode, name, rep in reports
            ]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
    else:
        raise DeltaError(f"unknown report format {fmt!r}")
