"""
Factory function for the trial cache location.
"""
import os
from pathlib import Path

from . import sqlite_cache


_initialized = False
_db_path = None


def get_trial_cache() -> str:
    """
    Get the trial cache path, initializing the database if needed.

    Reads SEQMUSIC_CACHE or defaults to ./data_local/trials.sqlite under the
    project root.
    """
    global _initialized, _db_path

    if _db_path is None:
        _db_path = os.getenv("SEQMUSIC_CACHE")
        if not _db_path:
            # src/seqmusic/storage/factory.py -> project root
            project_root = Path(__file__).parent.parent.parent.parent
            _db_path = str(project_root / "data_local" / "trials.sqlite")

    if not _initialized:
        sqlite_cache.init_db(_db_path)
        _initialized = True

    return _db_path


def reset() -> None:
    """Forget the resolved path (tests switch SEQMUSIC_CACHE between cases)."""
    global _initialized, _db_path
    _initialized = False
    _db_path = None
