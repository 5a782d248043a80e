"""Figure rendering for report files.

Uses the Agg backend so figures render identically in headless runs. PNG
metadata that varies between environments (the writing library's version
string) is stripped to keep outputs reproducible.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .harness import EnergyReport, STRATEGY_NAMES
from .metrics import MetricsReport

_PNG_META = {"Software": None}
_COLORS = {"product": "#1f77b4", "absdiff": "#d62728"}


def render_energy_figure(report: EnergyReport, path: str | Path) -> Path:
    """Median energy vs. masking proportion, with interquartile bands."""
    path = Path(path)
    props = [p * 100 for p in report.proportions]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name in STRATEGY_NAMES:
        rows = [report.strategies[name][p] for p in report.proportions]
        p25 = [r[1] for r in rows]
        p50 = [r[2] for r in rows]
        p75 = [r[3] for r in rows]
        color = _COLORS[name]
        ax.plot(props, p50, marker="o", color=color, label=f"{name} (median)")
        ax.fill_between(props, p25, p75, color=color, alpha=0.2, linewidth=0)
    ax.set_xlabel("masking proportion (%)")
    ax.set_ylabel("residual content energy")
    ax.set_title(f"Energy sweep over {report.n_pairs} pairs (T={report.temperature})")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return path


def render_metrics_figure(report: MetricsReport, path: str | Path) -> Path:
    """Bar chart of the five headline evaluation scores."""
    path = Path(path)
    names = ["fidelity", "leakage", "style", "image_alignment", "text_alignment"]
    values = [getattr(report, n) for n in names]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    bars = ax.bar(range(len(names)), values, color="#1f77b4")
    ax.bar_label(bars, fmt="%.3f")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels([n.replace("_", "\n") for n in names])
    ax.set_ylabel("score")
    ax.set_title(f"Evaluation over {report.n_items} items")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return path
