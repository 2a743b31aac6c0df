"""Report figures rendered straight to PNG files.

The Agg backend is forced before pyplot loads so rendering works headless
and produces identical bytes for identical inputs.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_DPI = 120
_BAR_COLORS = ("#4878a8", "#b85c50")


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return Path(path)


def uar_bars(path: Path, rows: list[tuple[str, float, float]], title: str = "UAR by feature set") -> Path:
    """Grouped dev/test UAR bars, one group per feature set."""
    names = [r[0] for r in rows]
    dev = [100.0 * r[1] for r in rows]
    test = [100.0 * r[2] for r in rows]
    x = range(len(rows))
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(rows) + 2.0), 3.6))
    ax.bar([i - 0.2 for i in x], dev, width=0.4, label="dev", color=_BAR_COLORS[0])
    ax.bar([i + 0.2 for i in x], test, width=0.4, label="test", color=_BAR_COLORS[1])
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("UAR [%]")
    ax.set_ylim(0, 100)
    ax.axhline(25.0, color="grey", linestyle=":", linewidth=1, label="chance")
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def wer_bars(path: Path, rows: list[tuple[str, float, float]]) -> Path:
    """WER and CER bars per transcript source."""
    names = [r[0] for r in rows]
    wer = [100.0 * r[1] for r in rows]
    cer = [100.0 * r[2] for r in rows]
    x = range(len(rows))
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(rows) + 2.0), 3.6))
    ax.bar([i - 0.2 for i in x], wer, width=0.4, label="WER", color=_BAR_COLORS[0])
    ax.bar([i + 0.2 for i in x], cer, width=0.4, label="CER", color=_BAR_COLORS[1])
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("error rate [%]")
    ax.set_title("Transcript error rates")
    ax.legend()
    return _finish(fig, path)


def tradeoff_curve(path: Path, rows: list[tuple[float, float, float]], spearman_rho: float | None) -> Path:
    """Measured WER and dev UAR against the corruption rate, twin axes."""
    rates = [r[0] for r in rows]
    wer = [100.0 * r[1] for r in rows]
    uar = [100.0 * r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(rates, wer, marker="o", color=_BAR_COLORS[0], label="WER")
    ax.set_xlabel("corruption rate")
    ax.set_ylabel("WER [%]", color=_BAR_COLORS[0])
    twin = ax.twinx()
    twin.plot(rates, uar, marker="s", color=_BAR_COLORS[1], label="dev UAR")
    twin.set_ylabel("dev UAR [%]", color=_BAR_COLORS[1])
    title = "WER vs. UAR under corruption"
    if spearman_rho is not None:
        title += f" (Spearman {spearman_rho:+.2f})"
    ax.set_title(title)
    return _finish(fig, path)


def fusion_bars(path: Path, rows: list[tuple[str, float, float]]) -> Path:
    """Best-combination dev and test UAR per fusion group."""
    return uar_bars(path, rows, title="Late fusion by modality group")
