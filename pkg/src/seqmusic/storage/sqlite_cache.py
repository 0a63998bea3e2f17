"""
SQLite cache for Monte Carlo trial records.

Rows are keyed by the outcome-determining config digest plus the trial
cell, so an interrupted sweep resumes where it stopped.
"""
import json
import logging
import sqlite3
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def init_db(db_path: str) -> None:
    """
    Initialize the SQLite database by creating parent directories and tables.

    Args:
        db_path: Path to the SQLite database file
    """
    db_file = Path(db_path)
    db_file.parent.mkdir(parents=True, exist_ok=True)

    schema_text = resources.files(__package__).joinpath("sqlite_schema.sql").read_text(encoding="utf-8")

    conn = sqlite3.connect(db_path)
    try:
        conn.executescript(schema_text)
        conn.commit()
    finally:
        conn.close()


def upsert_trials(db_path: str, config_key: str, rows: List[Dict[str, Any]]) -> None:
    """
    Insert or update trial rows for one configuration.

    Args:
        db_path: Path to the SQLite database file
        config_key: Digest of the outcome-determining config fields
        rows: Trial dictionaries with keys: algorithm, m, N, tau, mean,
              trial_index, estimated_support, true_support, success,
              error (optional), wall_time (optional), stage_diagnostics (optional)
    """
    conn = sqlite3.connect(db_path)
    try:
        cursor = conn.cursor()
        updated_at = _utc_now()

        for row in rows:
            cursor.execute("""
                INSERT INTO trials (
                    config_key, algorithm, m, snapshots, tau, mean, trial_index,
                    estimated_support, true_support, success, error,
                    wall_time_s, diagnostics_json, updated_at
                ) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                ON CONFLICT (config_key, algorithm, m, snapshots, tau, mean, trial_index)
                DO UPDATE SET
                    estimated_support = excluded.estimated_support,
                    true_support = excluded.true_support,
                    success = excluded.success,
                    error = excluded.error,
                    wall_time_s = excluded.wall_time_s,
                    diagnostics_json = excluded.diagnostics_json,
                    updated_at = excluded.updated_at
            """, (
                config_key,
                row["algorithm"],
                int(row["m"]),
                int(row["N"]),
                float(row["tau"]),
                float(row["mean"]),
                int(row["trial_index"]),
                json.dumps(list(row["estimated_support"])),
                json.dumps(list(row["true_support"])),
                int(bool(row["success"])),
                row.get("error"),
                float(row.get("wall_time") or 0.0),
                json.dumps(row.get("stage_diagnostics") or {}, sort_keys=True),
                updated_at,
            ))

        conn.commit()
    finally:
        conn.close()


def load_trials(db_path: str, config_key: str) -> List[Dict[str, Any]]:
    """
    Fetch every cached trial of one configuration.

    Returns:
        List of dictionaries shaped like the rows given to upsert_trials
    """
    conn = sqlite3.connect(db_path)
    try:
        cursor = conn.cursor()
        cursor.execute("""
            SELECT algorithm, m, snapshots, tau, mean, trial_index,
                   estimated_support, true_support, success, error,
                   wall_time_s, diagnostics_json
            FROM trials
            WHERE config_key = ?
            ORDER BY algorithm, m, snapshots, tau, mean, trial_index
        """, (config_key,))

        results = []
        for row in cursor.fetchall():
            results.append({
                "algorithm": row[0],
                "m": row[1],
                "N": row[2],
                "tau": row[3],
                "mean": row[4],
                "trial_index": row[5],
                "estimated_support": json.loads(row[6]),
                "true_support": json.loads(row[7]),
                "success": bool(row[8]),
                "error": row[9],
                "wall_time": row[10],
                "stage_diagnostics": json.loads(row[11]) if row[11] else {},
            })
        logger.debug("Loaded %s cached trials for %s", len(results), config_key)
        return results
    finally:
        conn.close()


def record_sweep_run(db_path: str, config_key: str, config: Dict[str, Any], trials_completed: int) -> None:
    """Upsert the config snapshot and trial count of a sweep."""
    conn = sqlite3.connect(db_path)
    try:
        cursor = conn.cursor()
        cursor.execute(
            """
            INSERT INTO sweep_runs (config_key, name, config_json, trials_completed, updated_at)
            VALUES (?, ?, ?, ?, ?)
            ON CONFLICT (config_key)
            DO UPDATE SET
                name = excluded.name,
                config_json = excluded.config_json,
                trials_completed = excluded.trials_completed,
                updated_at = excluded.updated_at
            """,
            (
                config_key,
                str(config.get("name", "custom")),
                json.dumps(config, sort_keys=True, default=str),
                int(trials_completed),
                _utc_now(),
            ),
        )
        conn.commit()
    finally:
        conn.close()


def get_sweep_run(db_path: str, config_key: str) -> Optional[Dict[str, Any]]:
    """Fetch the stored sweep snapshot, or None if this config never ran."""
    conn = sqlite3.connect(db_path)
    try:
        cursor = conn.cursor()
        cursor.execute(
            "SELECT config_key, name, config_json, trials_completed, updated_at FROM sweep_runs WHERE config_key = ?",
            (config_key,),
        )
        row = cursor.fetchone()
        if row is None:
            return None
        return {
            "config_key": row[0],
            "name": row[1],
            "config": json.loads(row[2]),
            "trials_completed": row[3],
            "updated_at": row[4],
        }
    finally:
        conn.close()
