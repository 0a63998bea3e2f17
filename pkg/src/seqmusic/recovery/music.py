"""
MUSIC-type support criteria.

Generalized MUSIC selects the remaining r atoms in one batch from the
augmented subspace R([A_partial, U]). The sequential variant re-estimates
that subspace after every accepted atom, and support filtering discards
the atoms of an over-complete estimate that are least explained by the
others.
"""

from __future__ import annotations

import logging
from typing import Any, Optional

import numpy as np

from seqmusic.errors import IllPosedAugmentationError, ParameterError, RankDeficiencyError
from seqmusic.recovery.support import SupportEstimate
from seqmusic.subspace import (
    Subspace,
    column_space,
    concatenate,
    dense,
    principal_subspace,
    residual_energies,
    singular_values,
)

logger = logging.getLogger(__name__)

AUGMENTATION_RANK_TOL = 1e-10
FILTER_RANK_TOL = 1e-10


def _check_shapes(matrix: np.ndarray, U: Subspace, estimate: SupportEstimate) -> None:
    if U.ambient_dim != matrix.shape[0]:
        raise ParameterError(
            "subspace ambient dimension differs from m", {"ambient_dim": U.ambient_dim, "m": matrix.shape[0]}
        )
    estimate.check_range(matrix.shape[1])


def _smallest(residuals: np.ndarray, candidates: np.ndarray, count: int) -> list[int]:
    """``count`` candidates with the smallest residual, ties by lowest index."""
    order = np.lexsort((candidates, residuals[candidates]))
    return [int(candidates[i]) for i in order[:count]]


def _remaining(n: int, taken: tuple[int, ...]) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[list(taken)] = False
    return np.flatnonzero(mask)


def generalized_music(A: Any, U: Subspace, partial: SupportEstimate, k: int) -> SupportEstimate:
    """
    Batch completion of a (k - r)-sized partial support.

    Returns ``partial`` followed by the r atoms with the smallest residual
    against the k-dimensional span of [A_partial, U].

    Raises:
        ParameterError: partial size differs from k - r
        IllPosedAugmentationError: [A_partial, U] has numerical rank below k
    """
    matrix = dense(A, "sensing matrix")
    _check_shapes(matrix, U, partial)
    r = U.dim
    if len(partial) != k - r:
        raise ParameterError("partial support must hold k - r indices", {"partial": len(partial), "k": k, "r": r})

    augmented = concatenate(matrix[:, list(partial.indices)], U)
    sigma = singular_values(augmented)
    if sigma.size < k or sigma[k - 1] <= AUGMENTATION_RANK_TOL * sigma[0]:
        raise IllPosedAugmentationError(
            "partial support and signal subspace span fewer than k dimensions",
            {"k": k, "m": matrix.shape[0], "partial": list(partial.indices)},
        )
    Q = principal_subspace(augmented, k)
    residuals = residual_energies(Q, matrix)
    candidates = _remaining(matrix.shape[1], partial.indices)
    chosen = _smallest(residuals, candidates, r)

    scores = partial.scores if partial.scores else tuple(float("inf") for _ in partial.indices)
    return SupportEstimate(
        partial.indices + tuple(chosen),
        scores + tuple(float(residuals[j]) for j in chosen),
    )


def classical_music(A: Any, U: Subspace, k: int) -> SupportEstimate:
    """The k atoms closest to R(U); exact only when r = k."""
    matrix = dense(A, "sensing matrix")
    if U.ambient_dim != matrix.shape[0]:
        raise ParameterError("subspace ambient dimension differs from m")
    if not 1 <= k <= matrix.shape[1]:
        raise ParameterError("k out of range", {"k": k, "n": matrix.shape[1]})
    residuals = residual_energies(U, matrix)
    chosen = _smallest(residuals, np.arange(matrix.shape[1]), k)
    return SupportEstimate(tuple(chosen), tuple(float(residuals[j]) for j in chosen))


def seq_subspace(A: Any, U: Subspace, init: SupportEstimate, k: int) -> SupportEstimate:
    """
    Forward sequential subspace estimation.

    Starting from ``init`` (k - r <= |init| < k) the leading-k left singular
    subspace of [A_I, U] is recomputed after every accepted atom and the
    atom with the smallest residual against it joins I.

    Raises:
        RankDeficiencyError: m < k
        ParameterError: init size outside [k - r, k)
    """
    matrix = dense(A, "sensing matrix")
    _check_shapes(matrix, U, init)
    m, n = matrix.shape
    r = U.dim
    if m < k:
        raise RankDeficiencyError("leading-k subspace undefined for m < k", {"m": m, "k": k})
    if not k - r <= len(init) < k:
        raise ParameterError(
            "initial support must satisfy k - r <= |init| < k", {"init": len(init), "k": k, "r": r}
        )

    estimate = SupportEstimate(
        init.indices, init.scores if init.scores else tuple(float("inf") for _ in init.indices)
    )
    while len(estimate) < k:
        augmented = concatenate(matrix[:, list(estimate.indices)], U)
        leading = principal_subspace(augmented, k)
        residuals = residual_energies(leading, matrix)
        candidates = _remaining(n, estimate.indices)
        best = _smallest(residuals, candidates, 1)[0]
        logger.debug("sequential step %s picked %s (residual %.3e)", len(estimate), best, residuals[best])
        estimate = estimate.extended(best, residuals[best])
    return estimate


def filter_truncation_bound(m: int, k: int, r: int) -> tuple[int, Optional[int]]:
    """
    Redundancy estimate l and the truncation bound it implies.

    l = max(1, m - (2k - r)) clipped to r. Truncation to 2(k - r) + l is only
    needed when r >= (k + l) / 2; otherwise the bound is None.
    """
    redundancy = int(min(r, max(1, m - (2 * k - r))))
    if 2 * r < k + redundancy:
        return redundancy, None
    return redundancy, 2 * (k - r) + redundancy


def support_filtering(
    A: Any,
    U: Subspace,
    I: SupportEstimate,
    k: int,
    r: Optional[int] = None,
    truncation: Optional[int] = None,
) -> SupportEstimate:
    """
    Backward support filtering.

    For each j in I, zeta(j) is the residual of a_j against the numerical
    column space of [A_{I minus j}, U]. The k - r indices with the smallest
    zeta are kept, in ascending zeta order.

    Raises:
        ParameterError: |I| <= k - r after truncation
    """
    matrix = dense(A, "sensing matrix")
    _check_shapes(matrix, U, I)
    r = U.dim if r is None else r
    if r != U.dim:
        raise ParameterError("r differs from the subspace dimension", {"r": r, "dim": U.dim})
    keep = k - r
    if keep == 0:
        return SupportEstimate()

    indices = I.indices
    if truncation is not None:
        indices = indices[: min(len(indices), truncation)]
    if len(indices) <= keep:
        raise ParameterError(
            "support filtering needs more than k - r candidates", {"candidates": len(indices), "k": k, "r": r}
        )

    zeta = np.empty(len(indices))
    for position, j in enumerate(indices):
        others = [i for i in indices if i != j]
        span = column_space(concatenate(matrix[:, others], U), FILTER_RANK_TOL)
        zeta[position] = residual_energies(span, matrix[:, j])[0]

    order = np.lexsort((np.asarray(indices), zeta))[:keep]
    logger.debug("support filtering zeta=%s kept %s", np.round(zeta, 6).tolist(), [indices[i] for i in order])
    return SupportEstimate(tuple(indices[i] for i in order), tuple(float(zeta[i]) for i in order))
