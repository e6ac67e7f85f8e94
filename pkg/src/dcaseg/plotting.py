"""Matplotlib figures written next to report files.

Rendering uses the Agg backend and strips the PNG software tag so repeated
runs give identical bytes.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .segmentation import SegmentReport  # noqa: E402
from .stats import ComparisonTable, SummaryRow  # noqa: E402

STYLE = {
    "figure.figsize": (8.0, 4.5),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
    "legend.frameon": False,
}

LABEL_COLORS = {"anomalous": "tab:red", "normal": "tab:blue"}
_PNG_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    return path


def _types(reports: Sequence[SegmentReport]) -> list[str]:
    return sorted({ag for r in reports for ag in r.scores})


def plot_segment_series(reports: Sequence[SegmentReport], path: str | Path,
                        labels: Mapping[str, str] | None = None, title: str = "",
                        phases: Sequence[tuple[int, int]] = ()) -> Path:
    """Kα per segment against segment midpoint tick, one line per antigen type."""
    labels = labels or {}
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for start, end in phases:
            ax.axvspan(start, end, color="0.85", lw=0)
        for ag in _types(reports):
            pts = [((r.start_tick + r.end_tick) / 2, r.scores[ag].k_alpha)
                   for r in reports if ag in r.scores]
            xs, ys = zip(*pts)
            style = "-" if len(pts) > 1 else "o"
            ax.plot(xs, ys, style, lw=0.8, ms=4, label=f"{ag} ({labels[ag]})" if ag in labels else ag)
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_xlabel("tick")
        ax.set_ylabel("K_alpha")
        if title:
            ax.set_title(title)
        if reports:
            ax.legend(loc="best")
        fig.tight_layout()
        return _save(fig, path)


def plot_summary(rows: Sequence[SummaryRow], path: str | Path, mode: str = "") -> Path:
    """Mean ± stdev and min/max envelope of Kα against segment size, per type."""
    by_type: dict[str, list[SummaryRow]] = {}
    for row in rows:
        by_type.setdefault(row.antigen_type, []).append(row)
    with plt.rc_context(STYLE):
        fig, (ax_mean, ax_sd) = plt.subplots(1, 2, figsize=(10.0, 4.0))
        for ag, rs in by_type.items():
            rs = sorted(rs, key=lambda r: r.segment_size)
            xs = [r.segment_size for r in rs]
            line, = ax_mean.plot(xs, [r.mean for r in rs], "o-", label=ag)
            ax_mean.fill_between(xs, [r.min for r in rs], [r.max for r in rs],
                                 color=line.get_color(), alpha=0.12, lw=0)
            ax_sd.plot(xs, [r.stdev for r in rs], "o-", color=line.get_color(), label=ag)
        for ax in (ax_mean, ax_sd):
            ax.set_xscale("log")
            ax.set_xlabel(f"segment size ({mode})" if mode else "segment size")
        ax_mean.set_ylabel("K_alpha mean (band: min..max)")
        ax_sd.set_ylabel("K_alpha stdev across segments")
        if by_type:
            ax_mean.legend(loc="best")
        fig.tight_layout()
        return _save(fig, path)


def plot_comparison(table: ComparisonTable, path: str | Path) -> Path:
    """One-sided p-values against the baseline, per run and type, with alpha marked."""
    types = list(table.plan.antigen_types)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        n = len(table.sizes)
        width = 0.8 / max(len(types), 1)
        for k, ag in enumerate(types):
            cells = table.baseline_for(ag)
            ys = [c.result.p_value if c.result else float("nan") for c in cells]
            ax.bar([i + k * width for i in range(n)], ys, width, label=ag)
        ax.axhline(table.plan.alpha, color="k", ls="--", lw=0.8)
        ax.set_xticks([i + width * (len(types) - 1) / 2 for i in range(n)])
        ax.set_xticklabels(["all" if s is None else str(s) for s in table.sizes])
        ax.set_ylim(0, 1)
        ax.set_xlabel(f"segment size ({table.mode})" if table.mode else "segment size")
        ax.set_ylabel("p-value vs. unsegmented baseline")
        if types:
            ax.legend(loc="best")
        fig.tight_layout()
        return _save(fig, path)
