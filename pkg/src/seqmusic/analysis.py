"""
Numerical evaluation of the noise-robustness theory.

Perturbation bound for the augmented signal subspace, forward and backward
SNR sufficiency conditions, the semicircle integral F(alpha) and the
feasibility gap f(gamma, alpha) that separates the regime where support
filtering is more robust than greedy selection.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import integrate, optimize

from seqmusic.errors import InfeasibleRegimeError, ParameterError
from seqmusic.problems import derive_seeds, gen_gaussian_sensing, gen_ground_truth, noiseless_block, synthesize
from seqmusic.subspace import (
    Subspace,
    concatenate,
    dense,
    principal_subspace,
    singular_values,
    subspace_distance,
)

logger = logging.getLogger(__name__)

MAX_EXHAUSTIVE_SUBSETS = 10_000
DEFAULT_SUBSET_SAMPLES = 2_000
MASS_TOL = 1e-8

REGION_FILTERING = "filtering_favored"
REGION_OMP = "omp_favored"
REGION_INFEASIBLE = "filtering_infeasible"


@dataclass(frozen=True)
class BoundReport:
    """Perturbation of the augmented subspace for one instance."""

    delta: float
    delta_op: float
    delta_proj: float
    sigma_k: float
    bound: Optional[float]
    feasible: bool
    gamma: float
    alpha: float
    measured: Optional[float] = None

    @property
    def holds(self) -> Optional[bool]:
        if not self.feasible or self.measured is None:
            return None
        return self.measured <= self.bound + 1e-12

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["holds"] = self.holds
        return payload


@dataclass(frozen=True)
class SigmaTildeSearch:
    value: float
    subsets: int
    exhaustive: bool


def sigma_k_augmented(A: Any, I: Sequence[int], S: Subspace, k: int) -> float:
    """k-th largest singular value of [A_I, basis(S)]."""
    matrix = dense(A, "sensing matrix")
    indices = list(I)
    if len(indices) + S.dim < k or matrix.shape[0] < k or k < 1:
        raise ParameterError(
            "augmented block has fewer than k columns or rows",
            {"I": len(indices), "dim": S.dim, "m": matrix.shape[0], "k": k},
        )
    return float(singular_values(concatenate(matrix[:, indices], S))[k - 1])


def perturbation_bound(delta: float, sigma_k: float) -> Optional[float]:
    """delta / (sigma_k - delta), or None when delta >= sigma_k."""
    if delta < 0 or sigma_k <= 0:
        raise ParameterError("bound needs delta >= 0 and sigma_k > 0", {"delta": delta, "sigma_k": sigma_k})
    if delta >= sigma_k:
        return None
    return delta / (sigma_k - delta)


def delta_operator(S: Subspace, S_tilde: Subspace) -> float:
    """||S - S_tilde Q||_2 with Q the unitary Procrustes alignment."""
    if S.basis.shape != S_tilde.basis.shape:
        raise ParameterError("bases differ in shape", {"S": S.basis.shape, "S_tilde": S_tilde.basis.shape})
    left, _, right_h = scipy.linalg.svd(S_tilde.basis.conj().T @ S.basis)
    rotation = left @ right_h
    return float(scipy.linalg.norm(S.basis - S_tilde.basis @ rotation, 2))


def delta_projection(S: Subspace, S_tilde: Subspace) -> float:
    return subspace_distance(S, S_tilde)


def bound_report(A: Any, I: Sequence[int], S: Subspace, S_tilde: Subspace, k: int) -> BoundReport:
    """
    Bound on the distance between the leading-k subspaces of [A_I, S] and
    [A_I, S_tilde]. The bound uses the projector distance; the aligned
    operator distance is reported alongside.
    """
    matrix = dense(A, "sensing matrix")
    m = matrix.shape[0]
    sigma = sigma_k_augmented(matrix, I, S, k)
    delta_op = delta_operator(S, S_tilde)
    delta_proj = delta_projection(S, S_tilde)
    bound = perturbation_bound(delta_proj, sigma)

    clean = principal_subspace(concatenate(matrix[:, list(I)], S), k)
    noisy = principal_subspace(concatenate(matrix[:, list(I)], S_tilde), k)
    return BoundReport(
        delta=delta_proj,
        delta_op=delta_op,
        delta_proj=delta_proj,
        sigma_k=sigma,
        bound=bound,
        feasible=bound is not None,
        gamma=k / m,
        alpha=S.dim / k,
        measured=subspace_distance(clean, noisy),
    )


def forward_threshold(gamma: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise ParameterError("gamma must lie in (0, 1)", {"gamma": gamma})
    return 1.0 + 1.0 / (1.0 - gamma)


def backward_threshold(gamma: float, alpha: float) -> float:
    load = gamma * (1.0 + alpha)
    if load >= 1.0:
        raise InfeasibleRegimeError("gamma * (1 + alpha) must be below 1", {"gamma": gamma, "alpha": alpha})
    return 1.0 + 1.0 / (1.0 - load)


def forward_snr_ok(sigma_k: float, delta: float, gamma: float) -> bool:
    """sigma_k / delta > 1 + 1/(1 - gamma); always true when delta = 0."""
    threshold = forward_threshold(gamma)
    if delta == 0:
        return True
    return sigma_k / delta > threshold


def backward_snr_ok(sigma_tilde: float, delta: float, gamma: float, alpha: float) -> bool:
    """sigma_tilde / delta > 1 + 1/(1 - gamma(1 + alpha))."""
    threshold = backward_threshold(gamma, alpha)
    if delta == 0:
        return True
    return sigma_tilde / delta > threshold


def sigma_tilde_search(
    A: Any,
    S: Subspace,
    I: Sequence[int],
    true_support: Sequence[int],
    k: int,
    r: int,
    q: int,
    max_exhaustive: int = MAX_EXHAUSTIVE_SUBSETS,
    samples: int = DEFAULT_SUBSET_SAMPLES,
    seed: int = 0,
) -> SigmaTildeSearch:
    """
    Largest sigma_k([A_T, S]) over (k - r)-subsets T of the correct indices
    in I other than q. Exhaustive up to ``max_exhaustive`` subsets, uniformly
    sampled otherwise.
    """
    truth = set(int(j) for j in true_support)
    pool = [int(i) for i in I if int(i) in truth and int(i) != q]
    size = k - r
    if size < 0 or len(pool) < size:
        raise ParameterError("not enough correct indices for sigma_tilde", {"pool": len(pool), "k - r": size})

    total = math.comb(len(pool), size)
    if total <= max_exhaustive:
        best = max(sigma_k_augmented(A, subset, S, k) for subset in itertools.combinations(pool, size))
        return SigmaTildeSearch(value=best, subsets=total, exhaustive=True)

    logger.info("sigma_tilde sampling %s of %s subsets", samples, total)
    rng = np.random.default_rng(seed)
    best = -math.inf
    for _ in range(samples):
        subset = rng.choice(pool, size=size, replace=False)
        best = max(best, sigma_k_augmented(A, sorted(int(j) for j in subset), S, k))
    return SigmaTildeSearch(value=best, subsets=samples, exhaustive=False)


def sigma_tilde(A: Any, S: Subspace, I: Sequence[int], true_support: Sequence[int], k: int, r: int, q: int) -> float:
    return sigma_tilde_search(A, S, I, true_support, k, r, q).value


def semicircle_mass(t: float) -> float:
    """Mass of (1/pi) sqrt(4 - x^2) dx on [0, 2t]; substitution x = 2 sin(theta)."""
    if not 0.0 <= t <= 1.0:
        raise ParameterError("t must lie in [0, 1]", {"t": t})
    value, _ = integrate.quad(lambda theta: 4.0 / math.pi * math.cos(theta) ** 2, 0.0, math.asin(t), epsabs=1e-13)
    return value


def semicircle_edge(alpha: float) -> float:
    """t1 in [0, 1] with semicircle_mass(t1) = alpha, by bisection."""
    if not 0.0 < alpha <= 1.0:
        raise ParameterError("alpha must lie in (0, 1]", {"alpha": alpha})
    if alpha == 1.0:
        return 1.0
    return optimize.bisect(lambda t: semicircle_mass(t) - alpha, 0.0, 1.0, xtol=1e-12)


def F_alpha(alpha: float) -> float:
    """
    (1/alpha) * integral over [0, 4 t1^2] of sqrt((4 - x) x) / (2 pi).

    The sqrt(x) factor is handled as an algebraic endpoint weight.
    """
    edge = semicircle_edge(alpha)
    upper = 4.0 * edge * edge
    if edge == 1.0:
        value, _ = integrate.quad(
            lambda x: 1.0 / (2.0 * math.pi), 0.0, 4.0, weight="alg", wvar=(0.5, 0.5), epsabs=1e-12
        )
    else:
        value, _ = integrate.quad(
            lambda x: math.sqrt(4.0 - x) / (2.0 * math.pi), 0.0, upper, weight="alg", wvar=(0.5, 0.0), epsabs=1e-12
        )
    return value / alpha


def lambda_mass() -> float:
    """Total mass of sqrt((4 - x) x) / (2 pi x) dx on [0, 4]; expected 1."""
    value, _ = integrate.quad(lambda x: 1.0 / (2.0 * math.pi), 0.0, 4.0, weight="alg", wvar=(-0.5, 0.5), epsabs=1e-12)
    if abs(value - 1.0) > MASS_TOL:
        logger.warning("limiting spectral measure has mass %.12f, expected 1", value)
    return value


def _check_ratios(gamma: float, alpha: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise ParameterError("gamma must lie in (0, 1)", {"gamma": gamma})
    if not 0.0 < alpha <= 1.0:
        raise ParameterError("alpha must lie in (0, 1]", {"alpha": alpha})


def _gap(gamma: float, alpha: float, f_alpha: float) -> float:
    forward = (alpha - alpha * math.sqrt(gamma) * (2.0 - f_alpha)) / 2.0
    return forward - (1.0 - gamma * (1.0 + alpha))


def feasibility_gap(gamma: float, alpha: float) -> float:
    """f(gamma, alpha); negative values favour support filtering."""
    _check_ratios(gamma, alpha)
    return _gap(gamma, alpha, F_alpha(alpha))


def _region(gamma: float, alpha: float, gap: float) -> str:
    if gamma * (1.0 + alpha) >= 1.0:
        return REGION_INFEASIBLE
    return REGION_FILTERING if gap < 0 else REGION_OMP


def classify_region(gamma: float, alpha: float) -> str:
    _check_ratios(gamma, alpha)
    return _region(gamma, alpha, feasibility_gap(gamma, alpha))


def region_for_dimensions(m: int, k: int, r: int) -> str:
    """Region for concrete sizes; gamma = k/m, alpha = r/k (m > r + k needed for filtering)."""
    if not 1 <= r <= k < m:
        raise ParameterError("region needs 1 <= r <= k < m", {"m": m, "k": k, "r": r})
    return classify_region(k / m, r / k)


def feasibility_grid(step: float = 0.01) -> pd.DataFrame:
    """
    Evaluate f on the (gamma, alpha) grid.
    Returns columns:
        - gamma, alpha (floats)
        - F_alpha (float)
        - f (float)
        - region (str)
    """
    if not 0.0 < step < 0.5:
        raise ParameterError("grid step must lie in (0, 0.5)", {"step": step})
    count = int(round(1.0 / step))
    gammas = np.linspace(step, 1.0 - step, count - 1)
    alphas = np.linspace(step, 1.0, count)

    rows = []
    for alpha in alphas:
        f_alpha = F_alpha(float(alpha))
        for gamma in gammas:
            gap = _gap(float(gamma), float(alpha), f_alpha)
            rows.append(
                {
                    "gamma": float(gamma),
                    "alpha": float(alpha),
                    "F_alpha": f_alpha,
                    "f": gap,
                    "region": _region(float(gamma), float(alpha), gap),
                }
            )
    grid = pd.DataFrame(rows, columns=["gamma", "alpha", "F_alpha", "f", "region"])
    changes = max_sign_changes(grid)
    logger.info("feasibility grid: %s points, at most %s sign change(s) of f in gamma", len(grid), changes)
    return grid


def max_sign_changes(grid: pd.DataFrame) -> int:
    """Largest number of sign changes of f along gamma for a fixed alpha."""
    worst = 0
    for _, block in grid.sort_values(["alpha", "gamma"]).groupby("alpha"):
        signs = np.sign(block["f"].to_numpy())
        signs = signs[signs != 0]
        worst = max(worst, int(np.count_nonzero(np.diff(signs))))
    return worst


def sigma_k_profile(
    n: int = 128,
    k: int = 8,
    r: int = 6,
    m: int = 32,
    snapshots: int = 16,
    trials: int = 100,
    seed: int = 0,
) -> pd.DataFrame:
    """
    sigma_k([A_I, S]) as I grows inside the true support from k - r to k - 1 atoms.
    Returns columns:
        - l (int): I holds k - r + l correct atoms
        - sigma_k_mean, sigma_k_std (float)
    """
    if trials < 1:
        raise ParameterError("trials must be positive", {"trials": trials})
    rows = []
    for trial in range(trials):
        matrix_seed, truth_seed, order_seed = derive_seeds(seed, (trial,))
        A = gen_gaussian_sensing(m, n, 0.0, matrix_seed)
        gt = gen_ground_truth(n, k, r, snapshots, 1.0, truth_seed)
        S = principal_subspace(noiseless_block(A, gt), r)
        order = np.random.default_rng(order_seed).permutation(gt.support)
        for l in range(r):
            I = [int(j) for j in order[: k - r + l]]
            rows.append({"trial": trial, "l": l, "sigma_k": sigma_k_augmented(A, I, S, k)})

    frame = pd.DataFrame(rows)
    summary = frame.groupby("l")["sigma_k"].agg(["mean", "std"]).reset_index()
    summary = summary.rename(columns={"mean": "sigma_k_mean", "std": "sigma_k_std"})
    summary["sigma_k_std"] = summary["sigma_k_std"].fillna(0.0)
    return summary[["l", "sigma_k_mean", "sigma_k_std"]]


def bound_validation(
    n: int = 128,
    m: int = 24,
    k: int = 8,
    r: int = 4,
    snapshots: int = 16,
    snr_db: float = 30.0,
    trials: int = 100,
    seed: int = 0,
) -> pd.DataFrame:
    """
    Compare the measured subspace distance with the perturbation bound on
    noisy instances. S is the exact signal subspace, S_tilde its estimate
    from the noisy observations, and I holds k - r + l correct atoms.
    """
    rows = []
    for trial in range(trials):
        matrix_seed, truth_seed, noise_seed, order_seed = derive_seeds(seed, (trial,), count=4)
        A = gen_gaussian_sensing(m, n, 0.0, matrix_seed)
        gt = gen_ground_truth(n, k, r, snapshots, 1.0, truth_seed)
        ensemble = synthesize(A, gt, snr_db, noise_seed)
        S = principal_subspace(ensemble.noiseless, r)
        S_tilde = principal_subspace(ensemble.Y, r)
        rng = np.random.default_rng(order_seed)
        l = int(rng.integers(0, r))
        I = [int(j) for j in rng.permutation(gt.support)[: k - r + l]]
        report = bound_report(A, I, S, S_tilde, k)
        rows.append({"trial": trial, "l": l, **report.to_dict()})
    columns = ["trial", "l", "delta_op", "delta_proj", "sigma_k", "bound", "measured", "feasible", "holds"]
    return pd.DataFrame(rows, columns=columns + ["delta", "gamma", "alpha"])[columns]
