"""
Greedy support initializers.

Subspace S-OMP and 2-thresholding rank atoms against an estimated signal
subspace; simultaneous OMP works directly on the observations. Ties always
go to the lowest index.
"""

from __future__ import annotations

import logging
from typing import Any

import numpy as np
import scipy.linalg

from seqmusic.errors import DegenerateDictionaryError, ParameterError
from seqmusic.recovery.support import SupportEstimate
from seqmusic.subspace import Subspace, dense

logger = logging.getLogger(__name__)


def _column_energy(matrix: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(matrix) ** 2, axis=0)


def subspace_s_omp(A: Any, U: Subspace, t: int, residual_tol: float = 1e-10) -> SupportEstimate:
    """
    Subspace simultaneous OMP.

    Each step picks the atom whose residual p_j (after removing the span of
    the atoms already chosen) has the largest normalized energy inside U:
    ||Q_U^H p_j||^2 / ||p_j||^2.

    Raises:
        ParameterError: t outside [0, min(m, n)] or dimension mismatch
        DegenerateDictionaryError: every remaining residual is numerically zero
    """
    matrix = dense(A, "sensing matrix")
    m, n = matrix.shape
    if U.ambient_dim != m:
        raise ParameterError("subspace ambient dimension differs from m", {"ambient_dim": U.ambient_dim, "m": m})
    if t == 0:
        return SupportEstimate()
    if not 1 <= t <= min(m, n):
        raise ParameterError("subspace S-OMP needs 1 <= t <= min(m, n)", {"t": t, "m": m, "n": n})

    column_energy = _column_energy(matrix)
    selected: list[int] = []
    scores: list[float] = []
    chosen_basis = np.zeros((m, 0), dtype=np.result_type(matrix, U.basis))
    residuals = matrix.astype(chosen_basis.dtype, copy=True)

    for _ in range(t):
        residual_energy = _column_energy(residuals)
        in_subspace = _column_energy(U.basis.conj().T @ residuals)
        valid = residual_energy >= residual_tol * column_energy
        valid[selected] = False
        if not np.any(valid):
            raise DegenerateDictionaryError(
                "no atom has a usable residual", {"selected": len(selected), "residual_tol": residual_tol}
            )
        score = np.full(n, -np.inf)
        score[valid] = in_subspace[valid] / residual_energy[valid]
        best = int(np.argmax(score))
        selected.append(best)
        scores.append(float(score[best]))

        direction = residuals[:, best]
        # Re-orthogonalize once against the chosen basis
        direction = direction - chosen_basis @ (chosen_basis.conj().T @ direction)
        direction = direction / np.linalg.norm(direction)
        chosen_basis = np.hstack([chosen_basis, direction[:, np.newaxis]])
        residuals = residuals - np.outer(direction, direction.conj() @ residuals)

    logger.debug("subspace S-OMP picked %s", selected)
    return SupportEstimate(tuple(selected), tuple(scores))


def two_thresholding(A: Any, U: Subspace, t: int) -> SupportEstimate:
    """The t atoms with the largest correlation ||Q_U^H a_j|| with the signal subspace."""
    matrix = dense(A, "sensing matrix")
    n = matrix.shape[1]
    if U.ambient_dim != matrix.shape[0]:
        raise ParameterError("subspace ambient dimension differs from m")
    if not 0 <= t <= n:
        raise ParameterError("two_thresholding needs 0 <= t <= n", {"t": t, "n": n})
    correlation = np.sqrt(_column_energy(U.basis.conj().T @ matrix))
    order = np.argsort(-correlation, kind="stable")[:t]
    return SupportEstimate(tuple(int(j) for j in order), tuple(float(correlation[j]) for j in order))


def s_omp(A: Any, Y: Any, t: int) -> SupportEstimate:
    """
    Classical simultaneous OMP on the observation matrix.

    Picks argmax ||a_j^H R||_2 / ||a_j|| and refits all selected rows by least
    squares before updating the residual R.
    """
    matrix = dense(A, "sensing matrix")
    observations = dense(getattr(Y, "Y", Y), "observations")
    m, n = matrix.shape
    if observations.shape[0] != m:
        raise ParameterError("observations and dictionary differ in rows", {"rows": observations.shape[0], "m": m})
    if t == 0:
        return SupportEstimate()
    if not 1 <= t <= min(m, n):
        raise ParameterError("S-OMP needs 1 <= t <= min(m, n)", {"t": t, "m": m, "n": n})

    column_norms = np.linalg.norm(matrix, axis=0)
    residual = observations.astype(np.result_type(matrix, observations), copy=True)
    selected: list[int] = []
    scores: list[float] = []
    for _ in range(t):
        correlation = np.linalg.norm(matrix.conj().T @ residual, axis=1) / column_norms
        correlation[selected] = -np.inf
        best = int(np.argmax(correlation))
        selected.append(best)
        scores.append(float(correlation[best]))
        atoms = matrix[:, selected]
        coefficients, *_ = scipy.linalg.lstsq(atoms, observations)
        residual = observations - atoms @ coefficients

    return SupportEstimate(tuple(selected), tuple(scores))
