"""
Command-line entry point.

    seqmusic sweep --preset fig3 --out results/fig3.csv
    seqmusic simulate --m 20 --snapshots 6 --algo seq_cs_music
    seqmusic analyze --target fig2 --out results/fig2.csv

Configuration precedence: defaults < preset < --config file < flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from dotenv import load_dotenv

from seqmusic import analysis
from seqmusic.bench import output
from seqmusic.bench.config import (
    KIND_FEASIBILITY,
    KIND_SIGMA_PROFILE,
    PRESETS,
    ExperimentConfig,
    resolve_config,
)
from seqmusic.bench.runner import build_instance, run_sweep, run_trial
from seqmusic.errors import ParameterError, SeqMusicError
from seqmusic.recovery.pipeline import ALGORITHMS
from seqmusic.storage import dumps

LOGGER = logging.getLogger("seqmusic")

ANALYSIS_TARGETS = ("fig1", "fig2", "bound")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--m", default=None, help="Measurement count(s): '20', '6,16' or '1..30'")
    parser.add_argument("--snapshots", default=None, help="Snapshot count(s) N")
    parser.add_argument("--snr-db", default=None, help="Frobenius SNR in dB; 'inf' for noiseless")
    parser.add_argument("--tau", default=None, help="Condition parameter(s) in (0, 1]")
    parser.add_argument("--mean", default=None, help="Gaussian entry mean(s)")
    parser.add_argument("--matrix", choices=["gaussian", "fourier"], default=None)
    parser.add_argument("--seed", type=int, default=None, help="Master seed")
    parser.add_argument("--filter-truncation", default=None, help="Integer bound or 'auto'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqmusic", description="Sequential compressive MUSIC benchmark")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Monte Carlo success-rate sweep")
    sweep.add_argument("--preset", choices=sorted(PRESETS), default=None)
    sweep.add_argument("--config", type=Path, default=None, help="KEY=value file")
    sweep.add_argument("--trials", type=int, default=None)
    sweep.add_argument("--out", type=Path, default=None, help="Summary CSV path")
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--algorithms", default=None, help=f"Comma list from {', '.join(ALGORITHMS)}")
    sweep.add_argument("--no-timing", action="store_true", help="Write zero wall times (byte-stable CSVs)")
    sweep.add_argument("--cache", default=None, help="SQLite trial cache; 'env' uses SEQMUSIC_CACHE")
    _common_flags(sweep)

    simulate = sub.add_parser("simulate", help="Run one algorithm on one seeded instance")
    simulate.add_argument("--n", type=int, default=None)
    simulate.add_argument("--k", type=int, default=None)
    simulate.add_argument("--r", type=int, default=None)
    simulate.add_argument("--algo", choices=sorted(ALGORITHMS), default="seq_cs_music")
    simulate.add_argument("--trial", type=int, default=0, help="Trial index within the seeded cell")
    simulate.add_argument("--dump", type=Path, default=None, help="Write the instance to parquet")
    _common_flags(simulate)

    analyze = sub.add_parser("analyze", help="Sigma profile, feasibility map or bound check")
    analyze.add_argument("--target", choices=ANALYSIS_TARGETS, required=True)
    analyze.add_argument("--out", type=Path, required=True)
    analyze.add_argument("--trials", type=int, default=100)
    analyze.add_argument("--seed", type=int, default=0)
    analyze.add_argument("--m", type=int, default=None)
    analyze.add_argument("--step", type=float, default=0.01, help="Feasibility grid step")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    values = {
        "m": args.m,
        "snapshots": args.snapshots,
        "snr_db": args.snr_db,
        "tau": args.tau,
        "mean": args.mean,
        "matrix": args.matrix,
        "seed": args.seed,
        "filter_truncation": args.filter_truncation,
    }
    for name in ("trials", "workers", "algorithms", "n", "k", "r"):
        values[name] = getattr(args, name, None)
    if getattr(args, "out", None) is not None:
        values["out"] = str(args.out)
    if getattr(args, "no_timing", False):
        values["record_timing"] = False
    if getattr(args, "algo", None):
        values["algorithms"] = args.algo
    return {key: value for key, value in values.items() if value is not None}


def _cache_path(option: Optional[str]) -> Optional[str]:
    if not option:
        return None
    if option == "env":
        from seqmusic.storage.factory import get_trial_cache

        return get_trial_cache()
    return option


def _run_analysis(target: str, out: Path, trials: int, seed: int, m: Optional[int], step: float) -> int:
    if target == "fig1":
        frame = analysis.sigma_k_profile(m=m or 32, trials=trials, seed=seed)
    elif target == "fig2":
        frame = analysis.feasibility_grid(step=step)
        LOGGER.info("Feasibility boundary crosses each gamma row at most %s time(s)", analysis.max_sign_changes(frame))
    else:
        frame = analysis.bound_validation(m=m or 24, trials=trials, seed=seed)
        feasible = frame[frame["feasible"]]
        LOGGER.info("Bound held in %s of %s feasible trials", int(feasible["holds"].sum()), len(feasible))
    output.write_table(frame, out)
    return 0


def _sweep(args: argparse.Namespace) -> int:
    cfg = resolve_config(args.preset, args.config, _overrides(args))
    if cfg.kind in (KIND_SIGMA_PROFILE, KIND_FEASIBILITY):
        if not cfg.output_path:
            raise ParameterError("analysis presets need --out", {"preset": cfg.name})
        target = "fig1" if cfg.kind == KIND_SIGMA_PROFILE else "fig2"
        return _run_analysis(target, Path(cfg.output_path), cfg.trials, cfg.master_seed, cfg.m_values[0], cfg.grid_step)

    result = run_sweep(cfg, cache_path=_cache_path(args.cache))
    if not cfg.output_path:
        print(output.format_summary(result.summary).to_csv(index=False, lineterminator="\n"), end="")
    return 0


def _simulate(args: argparse.Namespace) -> int:
    overrides = _overrides(args)
    overrides.setdefault("m", "20")
    overrides["trials"] = args.trial + 1
    cfg: ExperimentConfig = resolve_config(None, None, overrides)
    m, N, tau, mean = cfg.m_values[0], cfg.snapshots[0], cfg.taus[0], cfg.means[0]

    record = run_trial(cfg, m, N, args.trial, args.algo, tau, mean)
    payload = record.to_dict()
    payload["config"] = {key: cfg.to_dict()[key] for key in ("n", "k", "r", "snr_db", "matrix_family", "master_seed")}
    print(json.dumps(payload, indent=2, sort_keys=True, default=str))

    if args.dump:
        instance = build_instance(cfg, m, N, args.trial, tau, mean)
        dumps.dump_instance(args.dump, instance.A, instance.truth, instance.measurements)
    return 0 if record.error is None else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv(Path(os.getcwd()) / ".env.local", override=False)
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    try:
        if args.command == "sweep":
            return _sweep(args)
        if args.command == "simulate":
            return _simulate(args)
        return _run_analysis(args.target, args.out, args.trials, args.seed, args.m, args.step)
    except (SeqMusicError, OSError) as exc:
        LOGGER.error("%s", exc)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
