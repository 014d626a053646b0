"""Evaluation report files: delimited metrics plus a rendered figure.

matplotlib is imported lazily so the compile/query paths never pay for it.
"""

from __future__ import annotations

import json
from pathlib import Path

from .evalkit import WEIGHTED_ROW, Metrics, to_records, to_tsv


def render_figure(metrics: Metrics, path: Path) -> None:
    """Grouped precision/recall/f1 bars per database type, support annotated."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    records = to_records(metrics)
    names = [r["dbtype"] for r in records]
    width = 0.27
    positions = range(len(records))
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(records) + 2), 4.2))
    for offset, key, color in (
        (-width, "precision", "#4878a8"),
        (0.0, "recall", "#e49444"),
        (width, "f1", "#6a9f58"),
    ):
        ax.bar(
            [p + offset for p in positions],
            [r[key] for r in records],
            width=width,
            label=key if key != "f1" else "f1-score",
            color=color,
        )
    for p, r in zip(positions, records):
        ax.annotate(
            f"n={r['support']}",
            (p, 1.02),
            ha="center",
            fontsize=8,
            annotation_clip=False,
        )
    ax.set_xticks(list(positions))
    ax.set_xticklabels(
        [n if n != WEIGHTED_ROW else "weighted" for n in names],
        rotation=30,
        ha="right",
    )
    ax.set_ylim(0, 1.1)
    ax.set_ylabel("score")
    ax.set_title("Enriched-entity extraction quality")
    ax.legend(loc="lower right")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(metrics: Metrics, out_dir: Path) -> list[Path]:
    """Write metrics.tsv, metrics.json, and metrics.png under out_dir."""
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv_path = out_dir / "metrics.tsv"
    json_path = out_dir / "metrics.json"
    png_path = out_dir / "metrics.png"
    tsv_path.write_text(to_tsv(metrics), encoding="utf-8")
    json_path.write_text(
        json.dumps(to_records(metrics), indent=2) + "\n", encoding="utf-8"
    )
    render_figure(metrics, png_path)
    return [tsv_path, json_path, png_path]
