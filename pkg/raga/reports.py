"""CSV and SVG renderings of evaluation results. All writes are atomic."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
from matplotlib.figure import Figure  # noqa: E402

from .evaluation import AsymmetryRow, EvalReport, SweepResult, accuracy, confusion  # noqa: E402
from .storage import atomic_write_bytes, atomic_write_text  # noqa: E402

# fixed ids and no timestamp, so repeated runs render identical SVG bytes
matplotlib.rcParams["svg.hashsalt"] = "spd-report"
_SVG_METADATA = {"Date": None, "Creator": None}


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _pct(x: float) -> str:
    return f"{100.0 * x:.2f}"


def predictions_csv(report: EvalReport) -> str:
    header = ["id", "true_label", "predicted_label", "correct"] + [f"p_{label}" for label in report.labels]
    body = [
        [r.id, r.true_label, r.predicted_label, int(r.correct)] + [f"{p:.6f}" for p in r.probabilities]
        for r in sorted(report.rows, key=lambda r: r.id)
    ]
    return _csv([header] + body)


def confusion_csv(report: EvalReport) -> str:
    counts = confusion(report)
    rows = [["true\\predicted"] + list(report.labels)]
    rows += [[label] + [int(c) for c in counts[i]] for i, label in enumerate(report.labels)]
    return _csv(rows)


def summary_lines(report: EvalReport) -> list[str]:
    counts = confusion(report)
    wrong = int(counts.sum() - counts.trace())
    lines = [
        f"config: {report.config.describe()}",
        f"recordings: {len(report)}",
        f"accuracy: {_pct(accuracy(report))}%",
        f"misclassified: {wrong}",
    ]
    lines += [f"warning: {w}" for w in report.warnings]
    return lines


def sweep_csv(result: SweepResult) -> str:
    header = ["tradition"] + list(result.columns)
    row = ["+".join(result.traditions)] + [_pct(result.accuracies[c]) for c in result.columns]
    return _csv([header, row])


def asymmetry_csv(rows: list[AsymmetryRow]) -> str:
    body = [[r.label, f"{r.score:.6f}", r.recordings] for r in rows]
    return _csv([["label", "asymmetry", "recordings"]] + body)


def _svg_bytes(fig: Figure) -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata=_SVG_METADATA)
    return buf.getvalue()


def confusion_svg(report: EvalReport) -> bytes:
    counts = confusion(report)
    n = len(report.labels)
    size = max(4.0, 0.35 * n + 2.0)
    fig = Figure(figsize=(size, size))
    ax = fig.add_subplot()
    # grey level proportional to the number of recordings
    ax.imshow(counts, cmap="Greys", vmin=0, vmax=max(int(counts.max()), 1))
    ax.set_xticks(range(n), labels=report.labels, rotation=90, fontsize=7)
    ax.set_yticks(range(n), labels=report.labels, fontsize=7)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    peak = counts.max() or 1
    for i in range(n):
        for j in range(n):
            if counts[i, j]:
                ax.text(j, i, str(counts[i, j]), ha="center", va="center", fontsize=6,
                        color="white" if counts[i, j] > peak / 2 else "black")
    fig.tight_layout()
    return _svg_bytes(fig)


def asymmetry_svg(rows: list[AsymmetryRow]) -> bytes:
    fig = Figure(figsize=(max(4.0, 0.3 * len(rows) + 2.0), 4.0))
    ax = fig.add_subplot()
    ax.bar(range(len(rows)), [r.score for r in rows], color="0.4")
    ax.set_xticks(range(len(rows)), labels=[r.label for r in rows], rotation=90, fontsize=7)
    ax.set_ylabel("Bhattacharyya distance (positive vs negative)")
    fig.tight_layout()
    return _svg_bytes(fig)


def write_evaluation(report: EvalReport, out_dir, svg: bool = False) -> list:
    """predictions.csv, confusion.csv and summary.txt (+ confusion.svg)."""
    out_dir = Path(out_dir)
    written = [
        atomic_write_text(out_dir / "predictions.csv", predictions_csv(report)),
        atomic_write_text(out_dir / "confusion.csv", confusion_csv(report)),
        atomic_write_text(out_dir / "summary.txt", "\n".join(summary_lines(report)) + "\n"),
    ]
    if svg:
        written.append(atomic_write_bytes(out_dir / "confusion.svg", confusion_svg(report)))
    return written
