"""
Exception hierarchy for joint sparse recovery.

Every error raised by the library derives from SeqMusicError so that the
benchmark harness can tag a failed trial instead of aborting a sweep.
"""

from __future__ import annotations

from typing import Any, Mapping, Optional

MAX_CONTEXT_CHARS = 200


class SeqMusicError(Exception):
    """Base exception with an optional context mapping."""

    def __init__(self, message: str, context: Optional[Mapping[str, Any]] = None):
        super().__init__(message)
        self.context = dict(context or {})

    def __str__(self):
        base_msg = super().__str__()
        if self.context:
            details = ", ".join(f"{key}={value!r}" for key, value in sorted(self.context.items()))
            if len(details) > MAX_CONTEXT_CHARS:
                details = details[:MAX_CONTEXT_CHARS] + "..."
            base_msg += f" ({details})"
        return base_msg

    @property
    def tag(self) -> str:
        return f"{type(self).__name__}: {self}"


class ParameterError(SeqMusicError, ValueError):
    """Argument outside its documented range or inconsistent shapes."""


class DegenerateDictionaryError(SeqMusicError):
    """Every remaining candidate atom is numerically inside the selected span."""


class IllPosedAugmentationError(SeqMusicError):
    """Partial support concatenated with the signal subspace has rank below k."""


class RankDeficiencyError(SeqMusicError):
    """Leading-k subspace requested from fewer than k dimensions."""


class InfeasibleRegimeError(SeqMusicError):
    """Ratios outside the region where a noise-robustness condition is defined."""


class ResampleExhaustedError(SeqMusicError):
    """Random draw stayed degenerate after the maximum number of attempts."""


class OutputPathError(SeqMusicError):
    """Output location cannot be written."""
