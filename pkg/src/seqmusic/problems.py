"""
Synthetic joint sparse recovery instances.

Sensing matrices (Gaussian, mean-shifted Gaussian, partial DFT), rank
deficient row-sparse sources, SNR calibrated noise and the reduction of a
noisy ensemble to its canonical signal subspace. Every generator is a pure
function of its integer seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from seqmusic.errors import ParameterError, ResampleExhaustedError
from seqmusic.subspace import DEFAULT_RANK_TOL, Subspace, dense, numerical_rank, principal_subspace

logger = logging.getLogger(__name__)

MAX_RESAMPLES = 16
ZERO_ROW_TOL = 1e-12


class MatrixFamily(str, Enum):
    GAUSSIAN = "gaussian"
    FOURIER = "fourier"


class Field(str, Enum):
    REAL = "real"
    COMPLEX = "complex"


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """Column-normalized m x n dictionary with generation metadata."""

    matrix: np.ndarray
    family: MatrixFamily
    seed: int
    mean: float = 0.0

    @property
    def m(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def scalar_field(self) -> Field:
        return Field.COMPLEX if np.iscomplexobj(self.matrix) else Field.REAL


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Support and the k x N coefficient block aligned with it."""

    n: int
    support: tuple[int, ...]
    coeffs: np.ndarray
    rank_r: int
    tau: float
    seed: int = 0
    resamples: int = 0

    @property
    def k(self) -> int:
        return len(self.support)

    @property
    def snapshots(self) -> int:
        return int(self.coeffs.shape[1])

    def dense(self) -> np.ndarray:
        """Full n x N row-sparse matrix."""
        full = np.zeros((self.n, self.snapshots), dtype=self.coeffs.dtype)
        full[list(self.support), :] = self.coeffs
        return full


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """Observations Y = B + W together with the noiseless block B."""

    Y: np.ndarray
    snr_db: float
    noise_seed: int
    noiseless: np.ndarray = field(repr=False, default=None)

    @property
    def snapshots(self) -> int:
        return int(self.Y.shape[1])


@dataclass(frozen=True, eq=False)
class CanonicalProblem:
    A: SensingMatrix
    S_tilde: Subspace
    r: int


def _check_underdetermined(m: int, n: int) -> None:
    if not 1 <= m < n:
        raise ParameterError("sensing matrix must satisfy 1 <= m < n", {"m": m, "n": n})


def _normalize_columns(raw: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(raw, axis=0)
    if np.any(norms == 0.0):
        raise ParameterError("sensing matrix has an all-zero column")
    return raw / norms


def draw_gaussian_entries(m: int, n: int, mean: float, seed: int) -> np.ndarray:
    """Raw i.i.d. normal(mean, 1/m) draw before column normalization."""
    rng = np.random.default_rng(seed)
    return rng.normal(loc=mean, scale=math.sqrt(1.0 / m), size=(m, n))


def gen_gaussian_sensing(m: int, n: int, mean: float = 0.0, seed: int = 0) -> SensingMatrix:
    _check_underdetermined(m, n)
    raw = draw_gaussian_entries(m, n, mean, seed)
    return SensingMatrix(_normalize_columns(raw), MatrixFamily.GAUSSIAN, int(seed), float(mean))


def unitary_dft_matrix(n: int) -> np.ndarray:
    """n x n DFT matrix scaled by 1/sqrt(n)."""
    return np.fft.fft(np.eye(n), axis=0) / math.sqrt(n)


def gen_fourier_sensing(m: int, n: int, seed: int = 0) -> SensingMatrix:
    """Random m rows of the unitary DFT, rows drawn without replacement."""
    _check_underdetermined(m, n)
    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(n, size=m, replace=False))
    partial = unitary_dft_matrix(n)[rows, :]
    return SensingMatrix(_normalize_columns(partial), MatrixFamily.FOURIER, int(seed))


def gen_sensing(family: MatrixFamily | str, m: int, n: int, mean: float = 0.0, seed: int = 0) -> SensingMatrix:
    family = MatrixFamily(family)
    if family is MatrixFamily.FOURIER:
        return gen_fourier_sensing(m, n, seed)
    return gen_gaussian_sensing(m, n, mean, seed)


def _standard_normal(rng: np.random.Generator, shape: tuple[int, int], field_kind: Field) -> np.ndarray:
    if field_kind is Field.COMPLEX:
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    return rng.standard_normal(shape)


def _draw_coefficients(
    rng: np.random.Generator, n: int, k: int, r: int, N: int, tau: float, field_kind: Field
) -> tuple[np.ndarray, np.ndarray]:
    support = np.sort(rng.choice(n, size=k, replace=False))
    # Random orthonormal columns from the QR factor of a Gaussian block
    q, upper = np.linalg.qr(_standard_normal(rng, (k, r), field_kind))
    phases = np.diag(upper).copy()
    phases[phases == 0] = 1.0
    psi = q * (phases / np.abs(phases)).conj()
    scales = tau ** np.arange(r, dtype=float)
    phi = _standard_normal(rng, (r, N), field_kind) / math.sqrt(N)
    coeffs = psi @ (scales[:, np.newaxis] * phi)
    return support, coeffs


def gen_ground_truth(
    n: int,
    k: int,
    r: int,
    N: int,
    tau: float = 1.0,
    seed: int = 0,
    field_kind: Field | str = Field.REAL,
) -> GroundTruth:
    """
    Row-sparse source with rank-r coefficient block X_I = Psi Lambda Phi.

    Lambda = diag(tau**0, ..., tau**(r-1)). Degenerate draws (zero row or
    rank below r) are redrawn from the next sub-seed, at most MAX_RESAMPLES
    times.
    """
    field_kind = Field(field_kind)
    if not 1 <= r <= k <= n:
        raise ParameterError("ground truth requires 1 <= r <= k <= n", {"n": n, "k": k, "r": r})
    if r > N:
        raise ParameterError("rank cannot exceed the number of snapshots", {"r": r, "N": N})
    if not 0.0 < tau <= 1.0:
        raise ParameterError("tau must lie in (0, 1]", {"tau": tau})

    for attempt in range(MAX_RESAMPLES):
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(attempt,)))
        support, coeffs = _draw_coefficients(rng, n, k, r, N, tau, field_kind)
        row_norms = np.linalg.norm(coeffs, axis=1)
        if np.all(row_norms > ZERO_ROW_TOL) and numerical_rank(coeffs, DEFAULT_RANK_TOL) == r:
            if attempt:
                logger.warning("Ground truth resampled %s time(s) for seed %s", attempt, seed)
            return GroundTruth(
                n=n,
                support=tuple(int(j) for j in support),
                coeffs=coeffs,
                rank_r=r,
                tau=float(tau),
                seed=int(seed),
                resamples=attempt,
            )

    raise ResampleExhaustedError(
        "ground truth stayed degenerate", {"seed": seed, "attempts": MAX_RESAMPLES, "tau": tau, "r": r}
    )


def noiseless_block(A: SensingMatrix, gt: GroundTruth) -> np.ndarray:
    if gt.n != A.n:
        raise ParameterError("ground truth length differs from dictionary size", {"n": gt.n, "cols": A.n})
    return A.matrix[:, list(gt.support)] @ gt.coeffs


def synthesize(A: SensingMatrix, gt: GroundTruth, snr_db: float, seed: int = 0) -> MeasurementEnsemble:
    """
    Y = A_support X + W with W white Gaussian noise.

    W is scaled once so that 20*log10(||B||_F / ||W||_F) equals ``snr_db``.
    """
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ParameterError("snr_db must be finite or +inf", {"snr_db": snr_db})
    B = noiseless_block(A, gt)
    if math.isinf(snr_db):
        return MeasurementEnsemble(Y=B.copy(), snr_db=float(snr_db), noise_seed=int(seed), noiseless=B)

    signal_norm = np.linalg.norm(B)
    if signal_norm == 0.0:
        raise ParameterError("noiseless block is zero; SNR undefined")
    rng = np.random.default_rng(seed)
    kind = Field.COMPLEX if np.iscomplexobj(B) else Field.REAL
    W = _standard_normal(rng, B.shape, kind)
    W *= signal_norm / (np.linalg.norm(W) * 10.0 ** (snr_db / 20.0))
    return MeasurementEnsemble(Y=B + W, snr_db=float(snr_db), noise_seed=int(seed), noiseless=B)


def canonicalize(A: SensingMatrix, Y: MeasurementEnsemble | np.ndarray, r: int) -> CanonicalProblem:
    """Rank-r orthonormal signal subspace estimate of R(Y)."""
    observations = dense(getattr(Y, "Y", Y), "observations")
    m, N = observations.shape
    if not 1 <= r <= min(m, N):
        raise ParameterError("rank out of range for canonical form", {"r": r, "m": m, "N": N})
    return CanonicalProblem(A=A, S_tilde=principal_subspace(observations, r), r=r)


def estimate_signal_rank(Y: MeasurementEnsemble | np.ndarray, rel_tol: float, k: Optional[int] = None) -> int:
    """Numerical rank of Y clipped to [1, min(k, m, N)]."""
    observations = dense(getattr(Y, "Y", Y), "observations")
    upper = min(observations.shape)
    if k is not None:
        upper = min(upper, k)
    return max(1, min(upper, numerical_rank(observations, rel_tol)))


def derive_seeds(master_seed: int, key: tuple[int, ...], count: int = 3) -> tuple[int, ...]:
    """
    Independent 64-bit seeds for one Monte Carlo cell.

    ``key`` is used as the spawn key of a SeedSequence rooted at
    ``master_seed``, so distinct keys give distinct streams.
    """
    if any(int(part) < 0 for part in key):
        raise ParameterError("seed key components must be non-negative", {"key": key})
    sequence = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(part) for part in key))
    return tuple(int(value) for value in sequence.generate_state(count, dtype=np.uint64))
