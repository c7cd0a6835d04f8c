"""Figure rendering for the report-producing commands.

Figures are companions to the delimited outputs, never the primary
artifact.  Everything renders through the Agg backend to PNG files; the
producing configuration is embedded in the PNG text metadata so a figure,
like every other artifact, carries its own provenance.  Rendering is
deterministic: the same inputs yield byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import ConfigurationError
from .metrics import ReasoningLabelReport, SweepCurve, TypeBreakdown, _RARENESS_ORDER


def _checked_png(path: str | Path) -> Path:
    path = Path(path)
    if path.suffix.lower() != ".png":
        raise ConfigurationError(
            f"figure path must end in .png (other backends stamp wall-clock "
            f"times into the file), got {path.name!r}"
        )
    return path


def _save(fig, path: Path, config_note: str | None) -> None:
    metadata = {"Description": config_note} if config_note else None
    fig.savefig(path, dpi=150, metadata=metadata)
    plt.close(fig)


def save_entropy_histogram(
    normalized_scores: list[float],
    threshold: float,
    path: str | Path,
    config_note: str | None = None,
) -> None:
    """Histogram of per-group normalized entropies with the selection cutoff."""
    path = _checked_png(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    scores = [s for s in normalized_scores if not math.isnan(s)]
    ax.hist(scores, bins=40, range=(0.0, 1.0), color="#4878a8", edgecolor="white")
    ax.axvline(threshold, color="#c44e52", linestyle="--", label=f"threshold = {threshold:g}")
    ax.set_xlabel("normalized answer entropy")
    ax.set_ylabel("groups")
    ax.set_title("group imbalance (selected groups lie left of the cutoff)")
    ax.legend()
    fig.tight_layout()
    _save(fig, path, config_note)


def save_sweep_figure(curve: SweepCurve, path: str | Path, config_note: str | None = None) -> None:
    """Tail accuracy (and confusion when present) against alpha, log x-axis."""
    path = _checked_png(path)
    have_confusion = any(p.confusion is not None for p in curve.points)
    n_axes = 2 if have_confusion else 1
    fig, axes = plt.subplots(n_axes, 1, figsize=(7, 3.2 * n_axes), sharex=True, squeeze=False)
    alphas = [p.alpha for p in curve.points]
    acc = [p.acc_tail for p in curve.points]
    ax = axes[0][0]
    ax.plot(alphas, acc, marker="o", color="#4878a8")
    ax.set_xscale("log")
    ax.set_ylabel("tail accuracy (%)")
    ax.grid(True, which="both", alpha=0.3)
    if have_confusion:
        conf = [p.confusion if p.confusion is not None else math.nan for p in curve.points]
        ax2 = axes[1][0]
        ax2.plot(alphas, conf, marker="s", color="#c44e52")
        ax2.set_xscale("log")
        ax2.set_ylabel("head/tail confusion")
        ax2.grid(True, which="both", alpha=0.3)
    axes[-1][0].set_xlabel("alpha")
    fig.tight_layout()
    _save(fig, path, config_note)


def save_reasoning_figure(
    report: ReasoningLabelReport,
    per_type: dict[str, TypeBreakdown] | None,
    path: str | Path,
    config_note: str | None = None,
) -> None:
    """Joint rareness matrix as two heat panels, plus per-type mode bars."""
    path = _checked_png(path)
    n_panels = 3 if per_type else 2
    fig, axes = plt.subplots(1, n_panels, figsize=(4.2 * n_panels, 4.0))
    names = [lbl.value for lbl in _RARENESS_ORDER]
    for ax, correct in zip(axes[:2], (True, False)):
        grid = [
            [report.cell_percentage(pred, gt, correct) for gt in _RARENESS_ORDER]
            for pred in _RARENESS_ORDER
        ]
        im = ax.imshow(grid, cmap="Blues", vmin=0.0, vmax=100.0)
        for i in range(3):
            for j in range(3):
                shade = "white" if grid[i][j] > 55 else "black"
                ax.text(j, i, f"{grid[i][j]:.1f}", ha="center", va="center", color=shade)
        ax.set_xticks(range(3), names)
        ax.set_yticks(range(3), names)
        ax.set_xlabel("gold rareness")
        ax.set_ylabel("predicted rareness")
        ax.set_title("correct" if correct else "wrong")
        fig.colorbar(im, ax=ax, fraction=0.046)
    if per_type:
        ax = axes[2]
        types = sorted(per_type)
        bottoms = [0.0] * len(types)
        for mode, color in (("reason", "#55a868"), ("bias", "#c44e52"), ("other", "#8172b2")):
            share = [
                100.0 * getattr(per_type[t], mode) / per_type[t].n if per_type[t].n else 0.0
                for t in types
            ]
            ax.bar(range(len(types)), share, bottom=bottoms, label=mode, color=color)
            bottoms = [b + s for b, s in zip(bottoms, share)]
        ax.set_xticks(range(len(types)), types, rotation=30, ha="right")
        ax.set_ylabel("% of questions")
        ax.set_title("modes by question type")
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path, config_note)
