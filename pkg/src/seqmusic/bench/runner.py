"""
Seeded Monte Carlo trials and sweeps.

Every trial draws a fresh sensing matrix, ground truth and noise from seeds
derived from (master_seed, trial_index, m, N, tau, mean); all algorithms in
a sweep are evaluated on the same instance of a cell. Results do not depend
on worker count or completion order.
"""

from __future__ import annotations

import logging
import math
import multiprocessing as mp
import time
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from seqmusic.bench import output
from seqmusic.bench.config import KIND_RECOVERY, ExperimentConfig
from seqmusic.bench.output import SUMMARY_COLUMNS
from seqmusic.errors import ParameterError, SeqMusicError
from seqmusic.problems import (
    GroundTruth,
    MeasurementEnsemble,
    SensingMatrix,
    derive_seeds,
    estimate_signal_rank,
    gen_ground_truth,
    gen_sensing,
    synthesize,
)
from seqmusic.recovery.pipeline import debias, run_algorithm
from seqmusic.recovery.support import RecoveryConfig, SupportEstimate
from seqmusic.storage import sqlite_cache

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one algorithm on one seeded instance."""

    trial_index: int
    algorithm: str
    m: int
    N: int
    tau: float
    mean: float
    estimated_support: tuple[int, ...]
    true_support: tuple[int, ...]
    success: bool
    wall_time: float = field(default=0.0, compare=False)
    error: Optional[str] = None
    stage_diagnostics: Mapping[str, Any] = field(default_factory=dict)

    @property
    def cell(self) -> tuple:
        return (self.algorithm, self.m, self.N, self.tau, self.mean, self.trial_index)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trial_index": self.trial_index,
            "algorithm": self.algorithm,
            "m": self.m,
            "N": self.N,
            "tau": self.tau,
            "mean": self.mean,
            "estimated_support": list(self.estimated_support),
            "true_support": list(self.true_support),
            "success": self.success,
            "wall_time": self.wall_time,
            "error": self.error,
            "stage_diagnostics": dict(self.stage_diagnostics),
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "TrialRecord":
        return cls(
            trial_index=int(payload["trial_index"]),
            algorithm=str(payload["algorithm"]),
            m=int(payload["m"]),
            N=int(payload["N"]),
            tau=float(payload["tau"]),
            mean=float(payload["mean"]),
            estimated_support=tuple(int(j) for j in payload["estimated_support"]),
            true_support=tuple(int(j) for j in payload["true_support"]),
            success=bool(payload["success"]),
            wall_time=float(payload.get("wall_time") or 0.0),
            error=payload.get("error"),
            stage_diagnostics=dict(payload.get("stage_diagnostics") or {}),
        )


@dataclass(frozen=True, eq=False)
class TrialInstance:
    A: SensingMatrix
    truth: GroundTruth
    measurements: MeasurementEnsemble


@dataclass
class SweepResult:
    """Aggregated sweep with the per-trial records it came from."""

    config: ExperimentConfig
    summary: pd.DataFrame
    records: List[TrialRecord] = field(default_factory=list)

    @property
    def error_records(self) -> List[TrialRecord]:
        return [record for record in self.records if record.error]


def trial_seeds(cfg: ExperimentConfig, m: int, N: int, trial_index: int, tau: float, mean: float) -> tuple[int, int, int]:
    """(matrix, truth, noise) seeds of one cell; injective in every coordinate."""
    if tau not in cfg.taus or mean not in cfg.means:
        raise ParameterError("tau and mean must be values of the config", {"tau": tau, "mean": mean})
    key = (trial_index, m, N, cfg.taus.index(tau), cfg.means.index(mean))
    matrix_seed, truth_seed, noise_seed = derive_seeds(cfg.master_seed, key, count=3)
    return matrix_seed, truth_seed, noise_seed


def build_instance(
    cfg: ExperimentConfig, m: int, N: int, trial_index: int, tau: float, mean: float
) -> TrialInstance:
    matrix_seed, truth_seed, noise_seed = trial_seeds(cfg, m, N, trial_index, tau, mean)
    A = gen_sensing(cfg.matrix_family, m, cfg.n, mean, matrix_seed)
    truth = gen_ground_truth(cfg.n, cfg.k, cfg.r, N, tau, truth_seed, cfg.scalar_field)
    return TrialInstance(A=A, truth=truth, measurements=synthesize(A, truth, cfg.snr_db, noise_seed))


def _recovery_config(cfg: ExperimentConfig, r: int) -> RecoveryConfig:
    return RecoveryConfig(
        k=cfg.k,
        r=r,
        init_algo=cfg.init_algo,
        filter_truncation=cfg.filter_truncation,
        auto_truncation=cfg.auto_truncation,
    )


def _coefficient_error(instance: TrialInstance, estimate: SupportEstimate) -> float:
    support = sorted(estimate.indices)
    fitted = debias(instance.A, instance.measurements, support)
    truth = instance.truth.coeffs
    return float(np.linalg.norm(fitted - truth) / np.linalg.norm(truth))


def _diagnostics(instance: TrialInstance, estimate: SupportEstimate, r: int, success: bool) -> Dict[str, Any]:
    diagnostics: Dict[str, Any] = {
        "rank_used": r,
        "residuals": list(estimate.scores),
        "resamples": instance.truth.resamples,
    }
    for stage, stage_estimate in estimate.stages.items():
        diagnostics[stage] = list(stage_estimate.indices)
    if estimate.notes:
        diagnostics["notes"] = dict(estimate.notes)
    if success:
        diagnostics["coeff_rel_error"] = _coefficient_error(instance, estimate)
    return diagnostics


def _evaluate(
    cfg: ExperimentConfig,
    instance: Optional[TrialInstance],
    algorithm: str,
    m: int,
    N: int,
    trial_index: int,
    tau: float,
    mean: float,
    setup_error: Optional[str] = None,
) -> TrialRecord:
    started = time.perf_counter()
    estimated: tuple[int, ...] = ()
    diagnostics: Dict[str, Any] = {}
    error = setup_error
    success = False
    truth = instance.truth.support if instance is not None else ()

    if instance is not None:
        try:
            r = cfg.r
            if cfg.estimate_rank:
                r = estimate_signal_rank(instance.measurements, cfg.rank_rel_tol, cfg.k)
            estimate = run_algorithm(algorithm, instance.A, instance.measurements, cfg.k, r, _recovery_config(cfg, r))
            estimated = estimate.indices
            success = set(estimated) == set(truth)
            diagnostics = _diagnostics(instance, estimate, r, success)
        except SeqMusicError as exc:
            error = exc.tag
            logger.debug("trial %s %s m=%s N=%s failed: %s", trial_index, algorithm, m, N, error)

    elapsed = time.perf_counter() - started if cfg.record_timing else 0.0
    return TrialRecord(
        trial_index=trial_index,
        algorithm=algorithm,
        m=m,
        N=N,
        tau=tau,
        mean=mean,
        estimated_support=tuple(estimated),
        true_support=tuple(truth),
        success=success,
        wall_time=elapsed,
        error=error,
        stage_diagnostics=diagnostics,
    )


def run_trial(
    cfg: ExperimentConfig,
    m: int,
    N: int,
    trial_index: int,
    algorithm: str,
    tau: Optional[float] = None,
    mean: Optional[float] = None,
) -> TrialRecord:
    """Run one algorithm on the instance of one seeded cell."""
    tau = cfg.taus[0] if tau is None else tau
    mean = cfg.means[0] if mean is None else mean
    records = _run_cell((cfg, m, N, tau, mean, trial_index, (algorithm,)))
    return records[0]


def _run_cell(task: tuple) -> List[TrialRecord]:
    cfg, m, N, tau, mean, trial_index, algorithms = task
    instance: Optional[TrialInstance] = None
    setup_error: Optional[str] = None
    try:
        instance = build_instance(cfg, m, N, trial_index, tau, mean)
    except SeqMusicError as exc:
        setup_error = exc.tag
    return [
        _evaluate(cfg, instance, algorithm, m, N, trial_index, tau, mean, setup_error)
        for algorithm in algorithms
    ]


def _cells(cfg: ExperimentConfig) -> Iterable[tuple]:
    for m in cfg.m_values:
        for N in cfg.snapshots:
            for tau in cfg.taus:
                for mean in cfg.means:
                    for trial_index in range(cfg.trials):
                        yield m, N, tau, mean, trial_index


def _execute(tasks: Sequence[tuple], workers: int) -> List[TrialRecord]:
    records: List[TrialRecord] = []
    step = max(1, len(tasks) // 10)
    if workers <= 1 or len(tasks) <= 1:
        for position, task in enumerate(tasks, start=1):
            records.extend(_run_cell(task))
            if position % step == 0:
                logger.info("Completed %s/%s trial groups", position, len(tasks))
        return records

    chunksize = max(1, len(tasks) // (workers * 16))
    with mp.Pool(processes=workers) as pool:
        for position, cell_records in enumerate(pool.imap_unordered(_run_cell, tasks, chunksize=chunksize), start=1):
            records.extend(cell_records)
            if position % step == 0:
                logger.info("Completed %s/%s trial groups", position, len(tasks))
    return records


def aggregate(records: Sequence[TrialRecord], cfg: ExperimentConfig) -> pd.DataFrame:
    """
    Success rates per (algorithm, m, N, tau, mean).
    Returns columns:
        - algorithm, m, N, snr_db, tau, mean
        - trials (int)
        - success_rate, stderr = sqrt(p (1 - p) / trials)
        - mean_wall_time_ms (float)
    """
    if not records:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)

    frame = pd.DataFrame(
        [
            {
                "algorithm": record.algorithm,
                "m": record.m,
                "N": record.N,
                "tau": record.tau,
                "mean": record.mean,
                "trial_index": record.trial_index,
                "success": float(record.success),
                "wall_time_ms": record.wall_time * 1000.0,
            }
            for record in records
        ]
    )
    keys = ["algorithm", "m", "N", "tau", "mean"]
    frame = frame.sort_values(keys + ["trial_index"], kind="mergesort")
    summary = (
        frame.groupby(keys, sort=True)
        .agg(trials=("success", "size"), success_rate=("success", "mean"), mean_wall_time_ms=("wall_time_ms", "mean"))
        .reset_index()
    )
    p = summary["success_rate"]
    summary["stderr"] = np.sqrt(p * (1.0 - p) / summary["trials"])
    summary["snr_db"] = cfg.snr_db
    return summary[SUMMARY_COLUMNS].reset_index(drop=True)


def monotonicity_warnings(summary: pd.DataFrame, gap: int = 4, sigmas: float = 3.0) -> List[str]:
    """Cells where success at m exceeds success at m + gap by more than ``sigmas`` combined SE."""
    messages: List[str] = []
    lookup = {
        (row.algorithm, row.N, row.tau, row.mean, row.m): (row.success_rate, row.stderr)
        for row in summary.itertuples(index=False)
    }
    for (algorithm, N, tau, mean, m), (rate, err) in lookup.items():
        later = lookup.get((algorithm, N, tau, mean, m + gap))
        if later is None:
            continue
        combined = math.sqrt(err**2 + later[1] ** 2)
        if rate > later[0] + sigmas * combined:
            messages.append(f"{algorithm} N={N} tau={tau} mean={mean}: rate at m={m} exceeds m={m + gap}")
    return messages


def run_sweep(cfg: ExperimentConfig, cache_path: Optional[str] = None) -> SweepResult:
    """
    Run every (algorithm, m, N, tau, mean) cell for ``cfg.trials`` trials.

    With ``cache_path`` the trials already stored for this configuration are
    reused and new ones are stored. When ``cfg.output_path`` is set the CSV
    (and the error sidecar, if any trial failed) is written once at the end.

    Raises:
        OutputPathError: output location not writable (checked before any trial)
    """
    cfg.validate()
    if cfg.kind != KIND_RECOVERY:
        raise ParameterError(f"preset {cfg.name!r} is an analysis target, not a recovery sweep", {"kind": cfg.kind})
    if cfg.output_path:
        output.ensure_writable(cfg.output_path)

    config_key = cfg.cache_key()
    cached: Dict[tuple, TrialRecord] = {}
    if cache_path:
        sqlite_cache.init_db(cache_path)
        cached = {
            record.cell: record
            for record in map(TrialRecord.from_dict, sqlite_cache.load_trials(cache_path, config_key))
        }

    tasks = []
    reused: List[TrialRecord] = []
    for m, N, tau, mean, trial_index in _cells(cfg):
        missing = []
        for algorithm in cfg.algorithms:
            hit = cached.get((algorithm, m, N, tau, mean, trial_index))
            if hit is None:
                missing.append(algorithm)
            else:
                reused.append(hit if cfg.record_timing else replace(hit, wall_time=0.0))
        if missing:
            tasks.append((cfg, m, N, tau, mean, trial_index, tuple(missing)))

    logger.info(
        "Sweep %s: %s trial groups to run, %s cached records reused, %s worker(s)",
        cfg.name,
        len(tasks),
        len(reused),
        cfg.workers,
    )
    fresh = _execute(tasks, cfg.workers)
    if cache_path and fresh:
        sqlite_cache.upsert_trials(cache_path, config_key, [record.to_dict() for record in fresh])
        sqlite_cache.record_sweep_run(cache_path, config_key, cfg.to_dict(), len(reused) + len(fresh))

    records = sorted(reused + fresh, key=lambda record: record.cell)
    result = SweepResult(config=cfg, summary=aggregate(records, cfg), records=records)
    if math.isinf(cfg.snr_db):
        for message in monotonicity_warnings(result.summary):
            logger.warning("Success rate not monotone in m: %s", message)
    if result.error_records:
        logger.info("%s trial(s) ended with an error tag", len(result.error_records))
    if cfg.output_path:
        output.emit_csv(result, cfg.output_path)
        output.write_error_sidecar(result, cfg.output_path)
    return result
