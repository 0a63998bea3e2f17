"""Support estimates and recovery settings shared by every algorithm."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional

from seqmusic.errors import ParameterError


class InitAlgorithm(str, Enum):
    SUBSPACE_S_OMP = "subspace_s_omp"
    TWO_THRESHOLDING = "two_thresholding"


@dataclass(frozen=True)
class SupportEstimate:
    """
    Ordered support indices (0-based) with one diagnostic score per index.

    ``stages`` holds intermediate estimates of multi-stage pipelines and
    ``notes`` any scalar diagnostics they report.
    """

    indices: tuple[int, ...] = ()
    scores: tuple[float, ...] = ()
    stages: Mapping[str, "SupportEstimate"] = field(default_factory=dict, compare=False)
    notes: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        indices = tuple(int(j) for j in self.indices)
        scores = tuple(float(s) for s in self.scores)
        if len(set(indices)) != len(indices):
            raise ParameterError("support indices must be distinct", {"indices": indices})
        if any(j < 0 for j in indices):
            raise ParameterError("support indices must be non-negative", {"indices": indices})
        if scores and len(scores) != len(indices):
            raise ParameterError("one score per index required", {"indices": len(indices), "scores": len(scores)})
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return len(self.indices)

    def as_set(self) -> frozenset[int]:
        return frozenset(self.indices)

    def extended(self, index: int, score: float) -> "SupportEstimate":
        scores = self.scores if self.scores else (float("nan"),) * len(self.indices)
        return SupportEstimate(self.indices + (int(index),), scores + (float(score),))

    def check_range(self, n: int) -> None:
        for j in self.indices:
            if j >= n:
                raise ParameterError("support index out of range", {"index": j, "n": n})


@dataclass(frozen=True)
class RecoveryConfig:
    """Settings for the sequential pipeline."""

    k: int
    r: int
    init_algo: InitAlgorithm = InitAlgorithm.SUBSPACE_S_OMP
    residual_tol: float = 1e-10
    filter_truncation: Optional[int] = None
    auto_truncation: bool = False

    def __post_init__(self):
        object.__setattr__(self, "init_algo", InitAlgorithm(self.init_algo))
        if not 1 <= self.r <= self.k:
            raise ParameterError("recovery requires 1 <= r <= k", {"k": self.k, "r": self.r})
        if not self.residual_tol > 0:
            raise ParameterError("residual_tol must be positive", {"residual_tol": self.residual_tol})
        if self.filter_truncation is not None and self.filter_truncation < 1:
            raise ParameterError("filter_truncation must be positive", {"filter_truncation": self.filter_truncation})

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["init_algo"] = self.init_algo.value
        return payload
