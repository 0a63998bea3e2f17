"""
Dense-matrix subspace primitives.

Every support criterion is expressed through these helpers: orthonormal
bases from an SVD, projection residuals, numerical rank and the distance
between two subspaces. Real and complex inputs share one code path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np
import scipy.linalg

from seqmusic.errors import ParameterError

logger = logging.getLogger(__name__)

ORTHONORMAL_TOL = 1e-10
DEFAULT_RANK_TOL = 1e-8


def dense(matrix: Any, name: str = "matrix") -> np.ndarray:
    """
    Return a finite 2-D array for a matrix-like input.

    Objects exposing a ``matrix`` attribute (SensingMatrix) are unwrapped.
    """
    values = np.asarray(getattr(matrix, "matrix", matrix))
    if values.ndim != 2:
        raise ParameterError(f"{name} must be two-dimensional", {"shape": values.shape})
    if values.shape[0] < 1 or values.shape[1] < 1:
        raise ParameterError(f"{name} must have at least one row and one column", {"shape": values.shape})
    if not np.all(np.isfinite(values)):
        raise ParameterError(f"{name} contains NaN or Inf entries")
    return values


@dataclass(frozen=True, eq=False)
class Subspace:
    """Span of the orthonormal columns of ``basis`` (m x d)."""

    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis)
        if basis.ndim != 2:
            raise ParameterError("subspace basis must be two-dimensional", {"shape": basis.shape})
        if basis.shape[1] > basis.shape[0]:
            raise ParameterError("subspace dimension exceeds ambient dimension", {"shape": basis.shape})
        if basis.shape[1]:
            gram = basis.conj().T @ basis
            if not np.allclose(gram, np.eye(basis.shape[1]), atol=ORTHONORMAL_TOL, rtol=0.0):
                raise ParameterError("subspace basis columns are not orthonormal")
        object.__setattr__(self, "basis", basis)

    @property
    def ambient_dim(self) -> int:
        return int(self.basis.shape[0])

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def project(self, a: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.conj().T @ a)


def _svd(matrix: np.ndarray):
    return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesdd")


def singular_values(matrix: Any) -> np.ndarray:
    """Singular values in descending order."""
    return scipy.linalg.svdvals(dense(matrix))


def principal_subspace(matrix: Any, d: int) -> Subspace:
    """Span of the ``d`` leading left singular vectors of ``matrix``."""
    values = dense(matrix)
    limit = min(values.shape)
    if not 1 <= d <= limit:
        raise ParameterError("subspace dimension out of range", {"d": d, "max": limit})
    left, _, _ = _svd(values)
    return Subspace(left[:, :d])


def numerical_rank(matrix: Any, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Count singular values above ``rel_tol`` times the largest one."""
    if not 0.0 < rel_tol < 1.0:
        raise ParameterError("rel_tol must lie in (0, 1)", {"rel_tol": rel_tol})
    sigma = singular_values(matrix)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    rank = int(np.count_nonzero(sigma > rel_tol * sigma[0]))
    logger.debug("numerical rank %s of %s (rel_tol=%.1e)", rank, sigma.size, rel_tol)
    return rank


def column_space(matrix: Any, rel_tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """Numerical column space of ``matrix`` (possibly rank deficient)."""
    values = dense(matrix)
    left, sigma, _ = _svd(values)
    if sigma.size == 0 or sigma[0] == 0.0:
        return Subspace(np.zeros((values.shape[0], 0), dtype=values.dtype))
    rank = int(np.count_nonzero(sigma > rel_tol * sigma[0]))
    if rank < sigma.size:
        logger.debug("column space truncated to rank %s of %s", rank, sigma.size)
    return Subspace(left[:, :rank])


def residual_energies(subspace: Subspace, vectors: np.ndarray) -> np.ndarray:
    """Residual energy of every column of ``vectors`` against ``subspace``."""
    columns = np.asarray(vectors)
    if columns.ndim == 1:
        columns = columns[:, np.newaxis]
    if columns.shape[0] != subspace.ambient_dim:
        raise ParameterError(
            "vector length does not match ambient dimension",
            {"length": columns.shape[0], "ambient_dim": subspace.ambient_dim},
        )
    residual = columns - subspace.project(columns)
    return np.sum(np.abs(residual) ** 2, axis=0)


def residual_energy(subspace: Subspace, a: np.ndarray) -> float:
    """Squared norm of ``a`` minus its orthogonal projection onto ``subspace``."""
    vector = np.asarray(a)
    if vector.ndim != 1:
        raise ParameterError("residual_energy expects a single vector", {"shape": vector.shape})
    return float(residual_energies(subspace, vector)[0])


def subspace_distance(first: Subspace, second: Subspace) -> float:
    """Spectral norm of the difference between the two orthogonal projectors."""
    if first.ambient_dim != second.ambient_dim:
        raise ParameterError(
            "subspaces live in different ambient spaces",
            {"first": first.ambient_dim, "second": second.ambient_dim},
        )
    difference = first.projector() - second.projector()
    return float(scipy.linalg.norm(difference, 2))


def concatenate(columns: np.ndarray, subspace: Subspace) -> np.ndarray:
    """Horizontal concatenation [columns, basis(subspace)]."""
    return np.hstack([columns, subspace.basis])


def select_columns(matrix: Any, indices: Iterable[int]) -> np.ndarray:
    values = dense(matrix)
    index_list = check_indices(indices, values.shape[1])
    return values[:, index_list]


def check_indices(indices: Iterable[int], n: int) -> list[int]:
    """Validate an index collection against ``range(n)``."""
    index_list = [int(j) for j in indices]
    for j in index_list:
        if not 0 <= j < n:
            raise ParameterError("index out of range", {"index": j, "n": n})
    if len(set(index_list)) != len(index_list):
        raise ParameterError("indices must be distinct", {"indices": index_list})
    return index_list


def augmented_rank(
    sensing: Any,
    indices: Sequence[int],
    signal: Any,
    rel_tol: float = DEFAULT_RANK_TOL,
) -> int:
    """Numerical rank of [A_I, B]."""
    matrix = dense(sensing, "sensing matrix")
    block = dense(getattr(signal, "basis", signal), "signal block")
    if block.shape[0] != matrix.shape[0]:
        raise ParameterError(
            "signal block row count differs from the sensing matrix",
            {"rows": block.shape[0], "m": matrix.shape[0]},
        )
    atoms = select_columns(matrix, indices)
    return numerical_rank(np.hstack([atoms, block]), rel_tol)
