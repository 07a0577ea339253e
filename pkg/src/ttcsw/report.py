"""Report rendering: score tables as TSV/JSON plus matplotlib figures
written next to the delimited output."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import MetricsReport  # noqa: E402

_METRIC_COLUMNS = ("wP", "wR", "wF1", "NP_wP", "NP_wR", "NP_wF1")


def pct(x: float) -> str:
    return f"{100.0 * x:.1f}"


def render_metrics_table(reports: dict[str, MetricsReport]) -> str:
    """Human-readable score table, one row per dataset, values x100."""
    name_width = max([len(n) for n in reports] + [len("dataset")])
    lines = ["  ".join(["dataset".ljust(name_width)]
                       + [c.rjust(6) for c in _METRIC_COLUMNS])]
    for name, report in reports.items():
        values = [pct(getattr(report, c)).rjust(6) for c in _METRIC_COLUMNS]
        lines.append("  ".join([name.ljust(name_width)] + values))
    return "\n".join(lines)


def write_metrics_report(reports: dict[str, MetricsReport], out_path,
                         header: Optional[dict] = None,
                         figures: bool = True) -> list[Path]:
    """Write <out>.tsv, <out>.json and (optionally) <out>.png."""
    out_path = Path(out_path)
    base = out_path.with_suffix("") if out_path.suffix else out_path
    written = []

    tsv_path = base.with_suffix(".tsv")
    rows = ["\t".join(["dataset"] + list(_METRIC_COLUMNS)
                      + ["n_pred_triplets", "n_gold_triplets", "n_samples"])]
    for name, report in reports.items():
        rows.append("\t".join(
            [name] + [pct(getattr(report, c)) for c in _METRIC_COLUMNS]
            + [str(report.n_pred_triplets), str(report.n_gold_triplets),
               str(report.n_samples)]))
    _atomic_write(tsv_path, "\n".join(rows) + "\n")
    written.append(tsv_path)

    json_path = base.with_suffix(".json")
    payload = {"header": header or {},
               "reports": {name: report.to_dict()
                           for name, report in reports.items()}}
    _atomic_write(json_path, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    written.append(json_path)

    if figures:
        png_path = base.with_suffix(".png")
        _metrics_figure(reports, png_path)
        written.append(png_path)
    return written


def _metrics_figure(reports: dict[str, MetricsReport], path: Path) -> None:
    names = list(reports)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(names) + 2), 3.2))
    width = 0.25
    for i, metric in enumerate(("wP", "wR", "wF1")):
        xs = [j + (i - 1) * width for j in range(len(names))]
        ys = [100.0 * getattr(reports[n], metric) for n in names]
        ax.bar(xs, ys, width=width, label=metric)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("score x100")
    ax.set_ylim(0, 100)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_sweep_report(rows: Sequence[dict], out_path,
                       header: Optional[dict] = None,
                       figures: bool = True) -> list[Path]:
    """Sweep table: one row per (max_ngram, n_candidates) grid point, with
    a wF1-vs-ngram line plot (one line per candidate count)."""
    out_path = Path(out_path)
    base = out_path.with_suffix("") if out_path.suffix else out_path
    written = []

    columns = ["max_ngram", "n_candidates"] + list(_METRIC_COLUMNS)
    tsv_rows = ["\t".join(columns)]
    for row in rows:
        tsv_rows.append("\t".join(
            [str(row["max_ngram"]), str(row["n_candidates"])]
            + [pct(row[c]) for c in _METRIC_COLUMNS]))
    tsv_path = base.with_suffix(".tsv")
    _atomic_write(tsv_path, "\n".join(tsv_rows) + "\n")
    written.append(tsv_path)

    json_path = base.with_suffix(".json")
    _atomic_write(json_path, json.dumps({"header": header or {},
                                         "rows": list(rows)},
                                        indent=2, ensure_ascii=False) + "\n")
    written.append(json_path)

    if figures:
        png_path = base.with_suffix(".png")
        fig, ax = plt.subplots(figsize=(4.8, 3.2))
        by_candidates: dict[int, list[tuple[int, float]]] = {}
        for row in rows:
            by_candidates.setdefault(row["n_candidates"], []).append(
                (row["max_ngram"], 100.0 * row["wF1"]))
        for n_candidates, points in sorted(by_candidates.items()):
            points.sort()
            ax.plot([p[0] for p in points], [p[1] for p in points],
                    marker="o", label=f"{n_candidates} candidates")
        ax.set_xlabel("maximum n-gram")
        ax.set_ylabel("wF1 x100")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(png_path, dpi=150)
        plt.close(fig)
        written.append(png_path)
    return written


def _atomic_write(path: Path, content: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(content, encoding="utf-8")
    tmp.replace(path)
