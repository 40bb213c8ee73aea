"""Consolidated CSV and self-contained SVG plots for a run directory.

The SVG writers are deliberately hand-rolled: output depends only on
the numbers passed in, so rerunning a command reproduces the artifact
byte for byte.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DataError

_SVG_HEADER = '<?xml version="1.0" encoding="UTF-8"?>\n'


def _esc(text: str) -> str:
    return (
        str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def svg_bar_chart(
    labels: list[str],
    values: list[float],
    title: str,
    y_max: float | None = None,
    width: int = 640,
    height: int = 360,
) -> str:
    """Vertical bar chart with value captions; values in [0, y_max]."""
    if len(labels) != len(values):
        raise DataError("labels and values differ in length")
    if not values:
        raise DataError("nothing to plot")
    top = y_max if y_max is not None else max(max(values), 1e-9)
    margin_l, margin_b, margin_t = 50, 60, 40
    plot_w = width - margin_l - 20
    plot_h = height - margin_t - margin_b
    slot = plot_w / len(values)
    bar_w = slot * 0.7
    parts = [
        _SVG_HEADER,
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{_esc(title)}</text>\n',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>\n',
        f'<line x1="{margin_l}" y1="{margin_t + plot_h}" x2="{margin_l + plot_w}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>\n',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = margin_t + plot_h * (1 - frac)
        parts.append(
            f'<text x="{margin_l - 6}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{top * frac:.2f}</text>\n'
        )
        parts.append(
            f'<line x1="{margin_l - 3}" y1="{y:.1f}" x2="{margin_l}" y2="{y:.1f}" '
            'stroke="black"/>\n'
        )
    for i, (label, value) in enumerate(zip(labels, values)):
        frac = min(max(value / top, 0.0), 1.0)
        bar_h = plot_h * frac
        x = margin_l + slot * i + (slot - bar_w) / 2
        y = margin_t + plot_h - bar_h
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" '
            f'height="{bar_h:.1f}" fill="#4878a8"/>\n'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{y - 4:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{value:.3f}</text>\n'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{margin_t + plot_h + 14:.1f}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10">'
            f"{_esc(label)}</text>\n"
        )
    parts.append("</svg>\n")
    return "".join(parts)


def svg_heatmap(matrix: np.ndarray, labels: list[str], title: str) -> str:
    """Square heat grid (e.g. a confusion matrix) with cell counts."""
    matrix = np.asarray(matrix, dtype=np.float64)
    n = matrix.shape[0]
    if matrix.shape != (n, n) or n != len(labels):
        raise DataError("heatmap needs a square matrix matching the labels")
    cell = 56
    margin = 80
    size = margin + n * cell + 20
    top = matrix.max() if matrix.max() > 0 else 1.0
    parts = [
        _SVG_HEADER,
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">\n',
        f'<text x="{size / 2:.1f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{_esc(title)}</text>\n',
    ]
    for i in range(n):
        for j in range(n):
            frac = matrix[i, j] / top
            shade = int(round(255 - 185 * frac))
            x = margin + j * cell
            y = margin + i * cell
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="rgb({shade},{shade},255)" stroke="white"/>\n'
            )
            parts.append(
                f'<text x="{x + cell / 2:.1f}" y="{y + cell / 2 + 4:.1f}" '
                f'text-anchor="middle" font-family="sans-serif" font-size="11">'
                f"{matrix[i, j]:.0f}</text>\n"
            )
    for i, label in enumerate(labels):
        parts.append(
            f'<text x="{margin - 8}" y="{margin + i * cell + cell / 2 + 4:.1f}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11">'
            f"{_esc(label)}</text>\n"
        )
        parts.append(
            f'<text x="{margin + i * cell + cell / 2:.1f}" y="{margin - 8}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"{_esc(label)}</text>\n"
        )
    parts.append(
        f'<text x="16" y="{margin + n * cell / 2:.1f}" font-family="sans-serif" '
        f'font-size="11" transform="rotate(-90 16 {margin + n * cell / 2:.1f})" '
        'text-anchor="middle">true</text>\n'
    )
    parts.append("</svg>\n")
    return "".join(parts)


def _collect_reports(run_dir: Path) -> list[tuple[str, dict]]:
    reports = []
    for path in sorted(run_dir.rglob("*_report.json")):
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        name = str(path.relative_to(run_dir).parent)
        name = path.stem if name == "." else f"{name}/{path.stem}"
        reports.append((name, doc))
    return reports


def consolidate_run_dir(run_dir: str | Path, residents: list[str] | None = None) -> list[Path]:
    """Write consolidated.csv plus SVG plots for every report in run_dir.

    Returns the paths written. Accepts both single-evaluation reports
    and cross-validation reports (one CSV row per fold).
    """
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise DataError(f"run directory not found: {run_dir}")
    reports = _collect_reports(run_dir)
    if not reports:
        raise DataError(f"no *_report.json artifacts under {run_dir}")
    out_dir = run_dir / "report"
    out_dir.mkdir(exist_ok=True)
    written: list[Path] = []

    rows = []
    bar_labels, bar_values = [], []
    metrics = ("accuracy", "macro_precision", "macro_recall", "macro_f1")
    for name, doc in reports:
        if "folds" in doc:
            for fold, fd in enumerate(doc["folds"]):
                rows.append([name, fold] + [fd[m] for m in metrics])
            bar_labels.append(name)
            bar_values.append(doc["mean"]["accuracy"])
            confusion = np.sum([np.asarray(f["confusion"]) for f in doc["folds"]], axis=0)
        else:
            report = doc.get("report", doc)
            rows.append([name, 0] + [report[m] for m in metrics])
            bar_labels.append(name)
            bar_values.append(report["accuracy"])
            confusion = np.asarray(report["confusion"])
        labels = residents or [f"R{i + 1}" for i in range(confusion.shape[0])]
        svg = svg_heatmap(confusion, labels, f"confusion: {name}")
        svg_path = out_dir / f"confusion_{name.replace('/', '_')}.svg"
        svg_path.write_text(svg, encoding="utf-8")
        written.append(svg_path)

    csv_path = out_dir / "consolidated.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "fold"] + list(metrics))
        writer.writerows(rows)
    written.append(csv_path)

    bar_path = out_dir / "accuracy.svg"
    bar_path.write_text(
        svg_bar_chart(bar_labels, bar_values, "mean accuracy per run", y_max=1.0),
        encoding="utf-8",
    )
    written.append(bar_path)
    return written
