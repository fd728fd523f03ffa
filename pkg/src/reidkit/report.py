"""Report output: delimited rates, a standalone SVG plot, and PNG figures.

The CSV and SVG writers are dependency-free and byte-deterministic for a
given report; the PNG renderings go through matplotlib's Agg backend.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ProtocolReport

_PALETTE = ("#1f6fb2", "#d45500", "#2a9234", "#a02c9a", "#777777", "#b8a100")


def _metadata_lines(report: ProtocolReport) -> list[str]:
    return [
        "# cmc report",
        f"# seed: {report.seed}",
        f"# trials: {report.trials}",
        f"# shot: {report.shot_mode}",
        f"# probe_view: {report.probe_view}",
        f"# gallery_view: {report.gallery_view}",
        f"# gallery_order_digest: {report.gallery_digest}",
    ]


def write_report_csv(report: ProtocolReport, path: str) -> None:
    """Rates per method and rank: columns method, rank, mean_rate, std_rate."""
    lines = _metadata_lines(report)
    lines.append("method,rank,mean_rate,std_rate")
    for curves in report.methods:
        for rank in range(len(curves.mean_rates)):
            lines.append(
                f"{curves.name},{rank + 1},"
                f"{curves.mean_rates[rank]:.6f},{curves.std_rates[rank]:.6f}"
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_sweep_csv(report: ProtocolReport, path: str) -> None:
    """One row per retained dimension: dims, rank-1 mean and std."""
    if report.sweep is None:
        raise ValueError("report holds no dimension sweep")
    lines = _metadata_lines(report)
    lines[0] = "# subspace dimension sweep"
    lines.append("dims,rank1_mean_rate,rank1_std_rate")
    for k, dims in enumerate(report.sweep.dims):
        lines.append(
            f"{dims},{report.sweep.mean_rank1[k]:.6f},{report.sweep.std_rank1[k]:.6f}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report_svg(report: ProtocolReport, path: str) -> None:
    """Standalone SVG of the mean CMC curves, one polyline per method."""
    width, height = 640, 420
    left, right, top, bottom = 60, 200, 30, 50
    plot_w = width - left - right
    plot_h = height - top - bottom
    g = max(len(c.mean_rates) for c in report.methods)

    def sx(rank: float) -> float:
        if g == 1:
            return left + plot_w / 2
        return left + (rank - 1) / (g - 1) * plot_w

    def sy(rate: float) -> float:
        return top + (1.0 - rate) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333333" stroke-width="1"/>',
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        'font-family="sans-serif" font-size="13">rank</text>',
        f'<text x="16" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {top + plot_h / 2:.1f})">matching rate</text>',
    ]
    for frac in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        y = sy(frac)
        parts.append(
            f'<line x1="{left}" y1="{y:.1f}" x2="{left + plot_w}" y2="{y:.1f}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{frac:.1f}</text>'
        )
    n_ticks = min(g, 6)
    for i in range(n_ticks):
        rank = 1 + round(i * (g - 1) / max(n_ticks - 1, 1))
        x = sx(rank)
        parts.append(
            f'<line x1="{x:.1f}" y1="{top + plot_h}" x2="{x:.1f}" y2="{top + plot_h + 5}" '
            'stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{top + plot_h + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{rank}</text>'
        )
    for k, curves in enumerate(report.methods):
        color = _PALETTE[k % len(_PALETTE)]
        points = " ".join(
            f"{sx(rank + 1):.2f},{sy(rate):.2f}" for rank, rate in enumerate(curves.mean_rates)
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        ly = top + 16 + 18 * k
        lx = left + plot_w + 16
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" font-size="12">'
            f"{escape(curves.name)}</text>"
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def write_report_png(report: ProtocolReport, path: str) -> None:
    """Matplotlib rendering of the CMC curves with a std band per method."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2), dpi=120)
    for k, curves in enumerate(report.methods):
        ranks = np.arange(1, len(curves.mean_rates) + 1)
        color = _PALETTE[k % len(_PALETTE)]
        ax.plot(ranks, curves.mean_rates, color=color, label=curves.name)
        ax.fill_between(
            ranks,
            curves.mean_rates - curves.std_rates,
            curves.mean_rates + curves.std_rates,
            color=color,
            alpha=0.15,
            linewidth=0,
        )
    ax.set_xlabel("rank")
    ax.set_ylabel("matching rate")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_sweep_png(report: ProtocolReport, path: str) -> None:
    """Matplotlib rendering of rank-1 rate against retained dimensions."""
    if report.sweep is None:
        raise ValueError("report holds no dimension sweep")
    fig, ax = plt.subplots(figsize=(6.0, 4.2), dpi=120)
    ax.errorbar(
        report.sweep.dims,
        report.sweep.mean_rank1,
        yerr=report.sweep.std_rank1,
        marker="o",
        color=_PALETTE[0],
        capsize=3,
    )
    ax.set_xlabel("retained dimensions")
    ax.set_ylabel("rank-1 rate")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
