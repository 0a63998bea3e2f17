"""
Tests for the SQLite trial cache.
"""
import os
import sqlite3
import tempfile

import pytest

from seqmusic.storage import factory, sqlite_cache


@pytest.fixture
def temp_db():
    """Create a temporary SQLite database for testing."""
    fd, db_path = tempfile.mkstemp(suffix=".sqlite")
    os.close(fd)

    sqlite_cache.init_db(db_path)

    yield db_path

    if os.path.exists(db_path):
        os.remove(db_path)


def _trial_row(trial_index=0, success=True, **changes):
    row = {
        "trial_index": trial_index,
        "algorithm": "seq_cs_music",
        "m": 16,
        "N": 6,
        "tau": 1.0,
        "mean": 0.0,
        "estimated_support": [3, 9, 40, 77],
        "true_support": [3, 9, 40, 77],
        "success": success,
        "wall_time": 0.002,
        "error": None,
        "stage_diagnostics": {"init": [3, 9, 40, 77, 5], "residuals": [float("inf"), 0.0]},
    }
    row.update(changes)
    return row


def test_init_db_creates_tables(temp_db):
    """Test that init_db creates the required tables."""
    conn = sqlite3.connect(temp_db)
    cursor = conn.cursor()
    cursor.execute("""
        SELECT name FROM sqlite_master
        WHERE type='table' AND name IN ('sweep_runs', 'trials')
    """)
    tables = [row[0] for row in cursor.fetchall()]
    conn.close()

    assert "sweep_runs" in tables
    assert "trials" in tables


def test_init_db_is_idempotent(temp_db):
    sqlite_cache.init_db(temp_db)
    sqlite_cache.upsert_trials(temp_db, "key", [_trial_row()])
    sqlite_cache.init_db(temp_db)
    assert len(sqlite_cache.load_trials(temp_db, "key")) == 1


def test_upsert_trials_inserts_and_updates(temp_db):
    """Test that upsert_trials inserts new rows and updates existing ones."""
    sqlite_cache.upsert_trials(temp_db, "key", [_trial_row(0), _trial_row(1, success=False)])
    rows = sqlite_cache.load_trials(temp_db, "key")
    assert [row["trial_index"] for row in rows] == [0, 1]
    assert rows[0]["success"] is True
    assert rows[0]["estimated_support"] == [3, 9, 40, 77]
    assert rows[0]["stage_diagnostics"]["residuals"][0] == float("inf")

    sqlite_cache.upsert_trials(temp_db, "key", [_trial_row(1, success=True, error="ParameterError: x")])
    rows = sqlite_cache.load_trials(temp_db, "key")
    assert len(rows) == 2
    assert rows[1]["success"] is True
    assert rows[1]["error"] == "ParameterError: x"


def test_load_trials_filters_by_config_key(temp_db):
    sqlite_cache.upsert_trials(temp_db, "a", [_trial_row(0)])
    sqlite_cache.upsert_trials(temp_db, "b", [_trial_row(0, m=20), _trial_row(1, m=20)])
    assert len(sqlite_cache.load_trials(temp_db, "a")) == 1
    assert {row["m"] for row in sqlite_cache.load_trials(temp_db, "b")} == {20}
    assert sqlite_cache.load_trials(temp_db, "missing") == []


def test_sweep_run_snapshot(temp_db):
    assert sqlite_cache.get_sweep_run(temp_db, "key") is None
    sqlite_cache.record_sweep_run(temp_db, "key", {"name": "fig3", "snr_db": float("inf")}, 12)
    sqlite_cache.record_sweep_run(temp_db, "key", {"name": "fig3", "snr_db": float("inf")}, 20)
    run = sqlite_cache.get_sweep_run(temp_db, "key")
    assert run["name"] == "fig3"
    assert run["trials_completed"] == 20
    assert run["updated_at"].endswith("Z")


def test_factory_reads_environment(tmp_path, monkeypatch):
    path = tmp_path / "nested" / "trials.sqlite"
    monkeypatch.setenv("SEQMUSIC_CACHE", str(path))
    factory.reset()
    try:
        assert factory.get_trial_cache() == str(path)
        assert path.exists()
    finally:
        factory.reset()
