"""
Result files for sweeps and analysis targets.

Numbers are rendered with fixed formats so that two runs of the same
configuration produce byte-identical CSVs.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict

import pandas as pd

from seqmusic.errors import OutputPathError

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "algorithm",
    "m",
    "N",
    "snr_db",
    "tau",
    "mean",
    "trials",
    "success_rate",
    "stderr",
    "mean_wall_time_ms",
]

_FORMATS: Dict[str, Callable[[Any], str]] = {
    "algorithm": str,
    "m": lambda value: str(int(value)),
    "N": lambda value: str(int(value)),
    "trials": lambda value: str(int(value)),
    "snr_db": lambda value: f"{float(value):.6g}",
    "tau": lambda value: f"{float(value):.6g}",
    "mean": lambda value: f"{float(value):.6g}",
    "success_rate": lambda value: f"{float(value):.5f}",
    "stderr": lambda value: f"{float(value):.6g}",
    "mean_wall_time_ms": lambda value: f"{float(value):.6g}",
}


def sidecar_path(path: str | Path) -> Path:
    """``<out>.errors.jsonl`` next to the CSV."""
    target = Path(path)
    return target.with_name(target.name + ".errors.jsonl")


def ensure_writable(path: str | Path) -> Path:
    """
    Create the parent directory of ``path`` and check it accepts files.

    Raises:
        OutputPathError: directory cannot be created or written to
    """
    target = Path(path)
    parent = target.parent if str(target.parent) else Path(".")
    try:
        parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputPathError("cannot create output directory", {"path": str(target), "reason": exc.strerror}) from exc
    if target.is_dir():
        raise OutputPathError("output path is a directory", {"path": str(target)})
    if not os.access(parent, os.W_OK) or (target.exists() and not os.access(target, os.W_OK)):
        raise OutputPathError("output path is not writable", {"path": str(target)})
    return target


def format_summary(summary: pd.DataFrame) -> pd.DataFrame:
    """String-typed copy of a sweep summary, one fixed format per column."""
    columns = {column: [_FORMATS[column](value) for value in summary[column]] for column in SUMMARY_COLUMNS}
    return pd.DataFrame(columns, columns=SUMMARY_COLUMNS, dtype=object)


def _write_frame(frame: pd.DataFrame, path: str | Path) -> Path:
    target = ensure_writable(path)
    try:
        frame.to_csv(target, index=False, lineterminator="\n", encoding="utf-8")
    except OSError as exc:
        raise OutputPathError("failed to write CSV", {"path": str(target), "reason": exc.strerror}) from exc
    return target


def emit_csv(result: Any, path: str | Path) -> Path:
    """Write the summary of a sweep result; header only when there are no rows."""
    target = _write_frame(format_summary(result.summary), path)
    logger.info("Wrote %s summary rows to %s", len(result.summary), target)
    return target


def write_error_sidecar(result: Any, path: str | Path) -> Path | None:
    """
    Write one JSON line per error-tagged trial to ``<out>.errors.jsonl``.

    A stale sidecar from an earlier run is removed when nothing failed.
    """
    sidecar = sidecar_path(path)
    errors = result.error_records
    if not errors:
        if sidecar.exists():
            sidecar.unlink()
        return None
    lines = [
        json.dumps(
            {
                "algorithm": record.algorithm,
                "m": record.m,
                "N": record.N,
                "tau": record.tau,
                "mean": record.mean,
                "trial_index": record.trial_index,
                "error": record.error,
            },
            sort_keys=True,
        )
        for record in errors
    ]
    try:
        sidecar.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OutputPathError("failed to write error sidecar", {"path": str(sidecar)}) from exc
    logger.warning("%s trial(s) failed with an error; details in %s", len(errors), sidecar)
    return sidecar


def write_table(frame: pd.DataFrame, path: str | Path, float_format: str = "%.10g") -> Path:
    """Write an analysis table (sigma profile, feasibility grid, bound check)."""
    target = ensure_writable(path)
    try:
        frame.to_csv(target, index=False, lineterminator="\n", encoding="utf-8", float_format=float_format)
    except OSError as exc:
        raise OutputPathError("failed to write CSV", {"path": str(target), "reason": exc.strerror}) from exc
    logger.info("Wrote %s rows to %s", len(frame), target)
    return target


def success_curves(summary: pd.DataFrame) -> Dict[str, pd.DataFrame]:
    """
    Pivot a sweep summary into one m-indexed table per (N, tau, mean) panel.

    Each table has one column per algorithm holding its success rate.
    """
    panels: Dict[str, pd.DataFrame] = {}
    for (N, tau, mean), block in summary.groupby(["N", "tau", "mean"], sort=True):
        label = f"N={int(N)} tau={float(tau):g} mean={float(mean):g}"
        panels[label] = block.pivot(index="m", columns="algorithm", values="success_rate").sort_index()
    return panels
