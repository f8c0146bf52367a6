# magweyl/report.py

"""
magweyl - Reports

Summary CSV over every stored run and one log-log SVG per sweep. Output is
byte-stable for identical inputs; the SVG carries no date and a fixed id salt.
"""
import logging
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from .errors import ValidationError
from .runner import CSV_COLUMNS, ResultsStore, RunReport, csv_text

logger = logging.getLogger("magweyl.report")

# --- Constants ---
SUMMARY_NAME = "summary.csv"
PLOT_PREFIX = "sweep_"
SVG_HASH_SALT = "magweyl"
MIN_PLOT_POINTS = 2


def _sort_key(report: RunReport):
    return (
        report.sweep_id or "",
        report.sweep_value if report.sweep_value is not None else 0.0,
        report.scenario,
        report.mu,
        report.h,
        report.run_id,
    )


def group_sweeps(reports: Sequence[RunReport]) -> Dict[str, List[RunReport]]:
    groups: Dict[str, List[RunReport]] = {}
    for report in sorted(reports, key=_sort_key):
        if report.sweep_id is not None:
            groups.setdefault(report.sweep_id, []).append(report)
    return groups


def plot_sweep(reports: Sequence[RunReport], axis: str, path: Path):
    """log-log |remainder| against the swept coordinate, with and without corrections."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = SVG_HASH_SALT
    x = np.array([r.sweep_value for r in reports], dtype=float)
    with_corr = np.abs([r.N_exact - r.N_pred for r in reports])
    without = np.abs([r.N_exact - r.N_weyl for r in reports])

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for values, label, marker in (
        (with_corr, "N_pred with corrections", "o"),
        (without, "N_weyl only", "s"),
    ):
        keep = values > 0
        ax.loglog(x[keep], values[keep], marker=marker, linestyle="-", label=label)
    ax.set_xlabel(axis)
    ax.set_ylabel("|N_exact - prediction|")
    ax.set_title(f"{reports[0].scenario}: remainder vs {axis}")
    ax.legend()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_report(results_dir, timings: bool = False, sweep_axes: Dict[str, str] = None) -> List[Path]:
    """summary.csv plus one SVG per sweep with at least two points."""
    store = ResultsStore(results_dir)
    reports = sorted(store.load_runs(), key=_sort_key)
    if not reports:
        raise ValidationError(f"No RunReport found in '{results_dir}'; run or sweep first.")
    written = []
    summary = store.root / SUMMARY_NAME
    with summary.open("w", encoding="utf-8", newline="") as f:
        f.write(csv_text(reports, timings))
    written.append(summary)

    axes = dict(sweep_axes or {})
    for sweep_id, data in store.load_sweeps().items():
        axes.setdefault(sweep_id, data.get("axis", "h"))
    for sweep_id, group in group_sweeps(reports).items():
        if len(group) < MIN_PLOT_POINTS:
            continue
        path = store.root / f"{PLOT_PREFIX}{sweep_id}.svg"
        plot_sweep(group, axes.get(sweep_id, "h"), path)
        written.append(path)
    logger.info(f"Report: {len(reports)} run(s), {len(written) - 1} plot(s)")
    return written


def format_table(reports: Sequence[RunReport]) -> str:
    """Fixed-width terminal table with the summary columns."""
    columns = CSV_COLUMNS[:-1]
    rows = [report.csv_row()[:-1] for report in reports]
    widths = [max(len(c), *(len(r[i]) for r in rows)) if rows else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in rows)
    return "\n".join(lines)
