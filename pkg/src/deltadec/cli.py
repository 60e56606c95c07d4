"""Command-line entry point.

Configuration precedence: built-in defaults < JSON config file (--config or
the DELTA_CONFIG env var) < explicit flags.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import synthetic
from .backend import (
    LogitSource,
    NGramBackend,
    ScriptedBackend,
    tokenize,
    train_ngram_from_file,
)
from .core import ConfigError, DecodeConfig, DeltaError
from .harness import (
    DEFAULT_TEMPLATE,
    SweepGrid,
    emit_report,
    load_dataset,
    run_eval,
    save_dataset,
    sweep,
)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        import os

        path = os.environ.get("DELTA_CONFIG")
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config file {path}: {exc}")
    if not isinstance(doc, dict):
        raise click.UsageError(f"config file {path} must hold a JSON object")
    return doc


def _build_config(config_path, backend: LogitSource, **flags) -> DecodeConfig:
    """Merge defaults, config file, and explicit flags into a DecodeConfig."""
    merged = DecodeConfig().to_dict()
    vocab = getattr(backend, "vocab", None)
    merged["mask_token"] = vocab.eos if vocab is not None else 0
    merged["stop_tokens"] = [vocab.eos] if vocab is not None else []
    merged.update(_load_config_file(config_path))
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    try:
        return DecodeConfig.from_dict(merged)
    except (ConfigError, TypeError) as exc:
        raise click.UsageError(str(exc))


def _load_backend(backend: str, model: str | None) -> LogitSource:
    if model is None:
        raise click.UsageError("--model PATH is required")
    if not Path(model).exists():
        raise click.UsageError(f"model file not found: {model}")
    try:
        if backend == "ngram":
            return NGramBackend.load(model)
        return ScriptedBackend.load(model)
    except DeltaError as exc:
        raise click.UsageError(f"cannot load backend: {exc}")


def decode_options(f):
    opts = [
        click.option("--alpha", type=float, default=None, help="Logit ratio in [0,1]."),
        click.option("--r-mask", type=float, default=None, help="Masking ratio in [0,1]."),
        click.option("--beta", type=float, default=None, help="Plausibility threshold in [0,1]."),
        click.option("--temperature", type=float, default=None, help="Softmax temperature (> 0)."),
        click.option("--seed", type=int, default=None, help="64-bit decode seed."),
        click.option("--max-new-tokens", type=int, default=None, help="Generation length cap."),
        click.option("--sample/--greedy", "sample", default=None, help="Sampling vs greedy decoding."),
        click.option("--remask-each-step/--fixed-mask", default=None, help="Resample the mask every step."),
        click.option("--mask-generated/--mask-prompt-only", default=None, help="Allow masking generated tokens."),
        click.option("--mask-token", type=int, default=None, help="Token id used as MASK (default: eos)."),
        click.option("--backend", type=click.Choice(["ngram", "scripted"]), default="ngram", show_default=True),
        click.option("--model", type=str, default=None, help="Backend model file (JSON)."),
        click.option("--config", "config_path", type=str, default=None,
                     help="JSON config file (or set DELTA_CONFIG)."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _config_from_flags(config_path, source, alpha, r_mask, beta, temperature, seed,
                       max_new_tokens, sample, remask_each_step, mask_generated,
                       mask_token) -> DecodeConfig:
    return _build_config(
        config_path,
        source,
        alpha=alpha,
        r_mask=r_mask,
        beta=beta,
        temperature=temperature,
        seed=seed,
        max_new_tokens=max_new_tokens,
        mode=None if sample is None else ("sample" if sample else "greedy"),
        remask_each_step=remask_each_step,
        mask_generated=mask_generated,
        mask_token=mask_token,
    )


@click.group()
def main():
    """Masked-prompt contrastive decoding engine and QA evaluation harness."""


@main.command("decode")
@click.argument("prompt")
@decode_options
@click.option("--trace-out", type=str, default=None, help="Write a JSON step trace here.")
def cmd_decode(prompt, backend, model, trace_out, config_path, **flags):
    """Generate a completion for PROMPT and print it."""
    from .decoder import generate

    source = _load_backend(backend, model)
    config = _config_from_flags(config_path, source, **flags)
    vocab = getattr(source, "vocab", None)
    if vocab is None:
        raise click.UsageError("backend has no vocabulary; cannot tokenize")
    result = generate(tokenize(prompt, vocab), config, source)
    click.echo(result.text)
    if trace_out:
        with open(trace_out, "w", encoding="utf-8") as fh:
            json.dump(result.to_dict(include_trace=True), fh, indent=1, sort_keys=True)
            fh.write("\n")


@main.command("eval")
@click.option("--dataset", "dataset_path", type=str, required=True, help="JSON-lines dataset.")
@decode_options
@click.option("--template", "template_path", type=str, default=None, help="Prompt template file.")
@click.option("--out", type=str, default="report", show_default=True, help="Output path prefix.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv", show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render a comparison figure beside the report.")
def cmd_eval(dataset_path, backend, model, template_path, out, fmt, workers,
             figures, config_path, **flags):
    """Evaluate baseline vs delta decoding on a dataset."""
    if not Path(dataset_path).exists():
        raise click.UsageError(f"dataset file not found: {dataset_path}")
    source = _load_backend(backend, model)
    delta_cfg = _config_from_flags(config_path, source, **flags)
    baseline_cfg = delta_cfg.with_overrides(alpha=0.0)
    template = _read_template(template_path)
    try:
        dataset = load_dataset(dataset_path)
        baseline, delta = run_eval(
            dataset, baseline_cfg, delta_cfg, source,
            template=template, workers=workers,
        )
    except DeltaError as exc:
        raise click.UsageError(str(exc))
    name = Path(dataset_path).stem
    mode = delta_cfg.mode
    rows = [(name, mode, "baseline", baseline), (name, mode, "delta", delta)]
    report_path = Path(f"{out}.{fmt}")
    emit_report(rows, fmt, report_path)
    click.echo(f"wrote {report_path}")
    if figures:
        from .plots import render_eval_comparison

        fig_path = render_eval_comparison(baseline, delta, f"{out}_metrics.png",
                                          title=f"{name} ({mode})")
        click.echo(f"wrote {fig_path}")


@main.command("sweep")
@click.option("--dataset", "dataset_path", type=str, required=True, help="JSON-lines dataset.")
@decode_options
@click.option("--grid", "grid_spec", type=str, default="0.3,0.5,0.7x0.1,0.2,0.3,0.4,0.5",
              show_default=True, help="Grid spec: r1,r2,...xa1,a2,...")
@click.option("--template", "template_path", type=str, default=None, help="Prompt template file.")
@click.option("--out", type=str, default="sweep", show_default=True, help="Output path prefix.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv", show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render heatmaps beside the report.")
def cmd_sweep(dataset_path, backend, model, grid_spec, template_path, out, fmt,
              workers, figures, config_path, **flags):
    """Run the masking-ratio x logit-ratio ablation grid."""
    if not Path(dataset_path).exists():
        raise click.UsageError(f"dataset file not found: {dataset_path}")
    source = _load_backend(backend, model)
    fixed = _config_from_flags(config_path, source, **flags)
    template = _read_template(template_path)
    try:
        grid = SweepGrid.parse(grid_spec, fixed)
        dataset = load_dataset(dataset_path)
        reports = sweep(dataset, grid, source, template=template, workers=workers)
    except DeltaError as exc:
        raise click.UsageError(str(exc))
    name = Path(dataset_path).stem
    report_path = Path(f"{out}.{fmt}")
    emit_report(reports, fmt, report_path, dataset_name=name)
    click.echo(f"wrote {report_path}")
    if figures:
        from .plots import render_sweep_heatmaps

        for path in render_sweep_heatmaps(reports, out, title=f"({name})"):
            click.echo(f"wrote {path}")


@main.command("train-backend")
@click.option("--corpus", "corpus_path", type=str, required=True,
              help="Plain text corpus, one sentence per line.")
@click.option("--order", type=int, default=3, show_default=True)
@click.option("--k", type=float, default=0.01, show_default=True, help="Add-k smoothing constant.")
@click.option("--out", type=str, required=True, help="Output model file (JSON).")
def cmd_train_backend(corpus_path, order, k, out):
    """Train an n-gram backend from a text corpus."""
    if not Path(corpus_path).exists():
        raise click.UsageError(f"corpus file not found: {corpus_path}")
    try:
        model = train_ngram_from_file(corpus_path, order=order, smoothing_k=k)
    except DeltaError as exc:
        raise click.UsageError(str(exc))
    model.save(out)
    click.echo(f"wrote {out} (order={order}, k={k}, vocab={model.vocab_size()})")


@main.command("synth")
@click.option("--out-dir", type=str, default=".", show_default=True)
@click.option("--n-examples", type=int, default=50, show_default=True)
def cmd_synth(out_dir, n_examples):
    """Write the synthetic conflict corpus and QA dataset."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = synthetic.build_corpus()
    (out / "corpus.txt").write_text("\n".join(corpus) + "\n", encoding="utf-8")
    examples, _ = synthetic.build_dataset(n_examples)
    save_dataset(examples, out / "dataset.jsonl")
    (out / "template.txt").write_text(synthetic.SYNTH_TEMPLATE, encoding="utf-8")
    click.echo(f"wrote {out / 'corpus.txt'}, {out / 'dataset.jsonl'}, {out / 'template.txt'}")


@main.command("serve")
@decode_options
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", type=str, default="127.0.0.1", show_default=True)
def cmd_serve(backend, model, port, host, config_path, **flags):
    """Start the HTTP decode service."""
    import uvicorn

    from .server import create_app

    source = _load_backend(backend, model)
    config = _config_from_flags(config_path, source, **flags)
    app = create_app(source, config, draw_seeds=flags.get("seed") is None)
    uvicorn.run(app, host=host, port=port)


def _read_template(path: str | None) -> str:
    if path is None:
        return DEFAULT_TEMPLATE
    if not Path(path).exists():
        raise click.UsageError(f"template file not found: {path}")
    return Path(path).read_text(encoding="utf-8").strip("\n")


if __name__ == "__main__":
    sys.exit(main())
