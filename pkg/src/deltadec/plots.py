"""Figure rendering for harness reports.

Sweeps render as annotated heatmaps (one per metric) and eval runs as a
baseline-vs-delta bar chart, written next to the delimited report files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import EvalReport


def render_sweep_heatmaps(
    reports: dict[tuple[float, float], EvalReport],
    out_prefix: str | Path,
    title: str = "",
) -> list[Path]:
    """Write one heatmap PNG per metric (exact match, F1); returns the paths."""
    r_values = sorted({r for r, _ in reports})
    a_values = sorted({a for _, a in reports})
    written = []
    for metric, label in (("exact_match", "Exact Match"), ("f1", "F1")):
        grid = np.array(
            [[getattr(reports[(r, a)], metric) for a in a_values] for r in r_values]
        )
        fig, ax = plt.subplots(figsize=(1.2 * len(a_values) + 2, 1.0 * len(r_values) + 2))
        im = ax.imshow(grid, cmap="viridis", aspect="auto")
        ax.set_xticks(range(len(a_values)), [f"{a:g}" for a in a_values])
        ax.set_yticks(range(len(r_values)), [f"{r:g}" for r in r_values])
        ax.set_xlabel("logit ratio (alpha)")
        ax.set_ylabel("masking ratio")
        ax.set_title(f"{label} {title}".strip())
        for i in range(len(r_values)):
            for j in range(len(a_values)):
                ax.text(j, i, f"{grid[i, j]:.1f}", ha="center", va="center",
                        color="white", fontsize=9)
        fig.colorbar(im, ax=ax)
        path = Path(f"{out_prefix}_{metric}.png")
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def render_eval_comparison(
    baseline: EvalReport,
    delta: EvalReport,
    out_path: str | Path,
    title: str = "",
) -> Path:
    """Grouped bar chart of every populated metric for the two runs."""
    metrics = [("exact_match", "EM"), ("f1", "F1")]
    if baseline.has_ans_em is not None:
        metrics.append(("has_ans_em", "HasAns EM"))
    if baseline.no_ans_em is not None:
        metrics.append(("no_ans_em", "NoAns EM"))

    labels = [lbl for _, lbl in metrics]
    base_vals = [getattr(baseline, m) or 0.0 for m, _ in metrics]
    delta_vals = [getattr(delta, m) or 0.0 for m, _ in metrics]
    x = np.arange(len(labels))

    fig, ax = plt.subplots(figsize=(1.6 * len(labels) + 2, 4))
    ax.bar(x - 0.18, base_vals, width=0.36, label="baseline")
    ax.bar(x + 0.18, delta_vals, width=0.36, label="delta")
    ax.set_xticks(x, labels)
    ax.set_ylabel("score")
    ax.set_ylim(0, 100)
    ax.set_title(title or "baseline vs delta")
    ax.legend()
    path = Path(out_path)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
