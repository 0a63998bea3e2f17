"""
Recovery drivers: the sequential compressive MUSIC pipeline and the
baselines it is benchmarked against.
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Dict

import numpy as np
import scipy.linalg

from seqmusic.errors import ParameterError
from seqmusic.problems import canonicalize
from seqmusic.recovery.greedy import s_omp, subspace_s_omp, two_thresholding
from seqmusic.recovery.music import (
    classical_music,
    filter_truncation_bound,
    generalized_music,
    seq_subspace,
    support_filtering,
)
from seqmusic.recovery.support import InitAlgorithm, RecoveryConfig, SupportEstimate
from seqmusic.subspace import Subspace, dense

logger = logging.getLogger(__name__)


def _check_rank(matrix: np.ndarray, observations: np.ndarray, k: int, r: int) -> None:
    m = matrix.shape[0]
    N = observations.shape[1]
    if not 1 <= r <= min(k, m, N):
        raise ParameterError("pipeline requires 1 <= r <= min(k, m, N)", {"r": r, "k": k, "m": m, "N": N})


def _signal_subspace(A: Any, Y: Any, k: int, r: int) -> tuple[np.ndarray, Subspace]:
    matrix = dense(A, "sensing matrix")
    observations = dense(getattr(Y, "Y", Y), "observations")
    _check_rank(matrix, observations, k, r)
    return matrix, canonicalize(A, observations, r).S_tilde


def _initial_support(matrix: np.ndarray, U: Subspace, count: int, cfg: RecoveryConfig) -> SupportEstimate:
    if cfg.init_algo is InitAlgorithm.TWO_THRESHOLDING:
        return two_thresholding(matrix, U, count)
    return subspace_s_omp(matrix, U, count, cfg.residual_tol)


def seq_cs_music(A: Any, Y: Any, k: int, r: int, cfg: RecoveryConfig | None = None) -> SupportEstimate:
    """
    Sequential compressive MUSIC.

    Initializes k atoms, filters them down to the k - r most consistent ones
    and completes the support with sequential subspace estimation. The
    intermediate estimates are returned in ``stages``.
    """
    cfg = cfg or RecoveryConfig(k=k, r=r)
    if (cfg.k, cfg.r) != (k, r):
        raise ParameterError("config sparsity/rank differ from call arguments", {"cfg": (cfg.k, cfg.r), "call": (k, r)})
    matrix, U = _signal_subspace(A, Y, k, r)

    notes: Dict[str, Any] = {}
    truncation = cfg.filter_truncation
    if cfg.auto_truncation:
        redundancy, truncation = filter_truncation_bound(matrix.shape[0], k, r)
        notes["l_estimate"] = redundancy
    notes["truncation"] = truncation

    initial = _initial_support(matrix, U, k, cfg)
    filtered = support_filtering(matrix, U, initial, k, r, truncation=truncation)
    final = seq_subspace(matrix, U, filtered, k)
    logger.debug("seq_cs_music init=%s filtered=%s final=%s", initial.indices, filtered.indices, final.indices)
    return SupportEstimate(
        final.indices,
        final.scores,
        stages={"init": initial, "filtered": filtered},
        notes=notes,
    )


def cs_music(A: Any, Y: Any, k: int, r: int, cfg: RecoveryConfig | None = None) -> SupportEstimate:
    """k - r greedy picks completed by one batch of generalized MUSIC."""
    cfg = cfg or RecoveryConfig(k=k, r=r)
    matrix, U = _signal_subspace(A, Y, k, r)
    partial = _initial_support(matrix, U, k - r, cfg)
    final = generalized_music(matrix, U, partial, k)
    return SupportEstimate(final.indices, final.scores, stages={"init": partial})


def seq_no_filter(A: Any, Y: Any, k: int, r: int, cfg: RecoveryConfig | None = None) -> SupportEstimate:
    """Sequential subspace estimation from k - r greedy picks, no backward filtering."""
    cfg = cfg or RecoveryConfig(k=k, r=r)
    matrix, U = _signal_subspace(A, Y, k, r)
    partial = _initial_support(matrix, U, k - r, cfg)
    final = seq_subspace(matrix, U, partial, k)
    return SupportEstimate(final.indices, final.scores, stages={"init": partial})


def ss_omp(A: Any, Y: Any, k: int, r: int, cfg: RecoveryConfig | None = None) -> SupportEstimate:
    cfg = cfg or RecoveryConfig(k=k, r=r)
    matrix, U = _signal_subspace(A, Y, k, r)
    return subspace_s_omp(matrix, U, k, cfg.residual_tol)


def music(A: Any, Y: Any, k: int, r: int, cfg: RecoveryConfig | None = None) -> SupportEstimate:
    matrix, U = _signal_subspace(A, Y, k, r)
    return classical_music(matrix, U, k)


def simultaneous_omp(A: Any, Y: Any, k: int, r: int, cfg: RecoveryConfig | None = None) -> SupportEstimate:
    return s_omp(A, Y, k)


ALGORITHMS: Dict[str, Callable[..., SupportEstimate]] = {
    "seq_cs_music": seq_cs_music,
    "cs_music": cs_music,
    "seq_no_filter": seq_no_filter,
    "s_omp": simultaneous_omp,
    "ss_omp": ss_omp,
    "music": music,
}


def run_algorithm(name: str, A: Any, Y: Any, k: int, r: int, cfg: RecoveryConfig | None = None) -> SupportEstimate:
    try:
        algorithm = ALGORITHMS[name]
    except KeyError:
        raise ParameterError(f"unknown algorithm {name!r}", {"valid": sorted(ALGORITHMS)}) from None
    return algorithm(A, Y, k, r, cfg or RecoveryConfig(k=k, r=r))


def debias(A: Any, Y: Any, support: SupportEstimate | tuple[int, ...]) -> np.ndarray:
    """Least-squares coefficients on a fixed support, rows in support order."""
    matrix = dense(A, "sensing matrix")
    observations = dense(getattr(Y, "Y", Y), "observations")
    indices = list(getattr(support, "indices", support))
    if not indices:
        return np.zeros((0, observations.shape[1]), dtype=np.result_type(matrix, observations))
    coefficients, *_ = scipy.linalg.lstsq(matrix[:, indices], observations)
    return coefficients
