"""Tests for experiment configs, seeded trials, sweep aggregation and CSV output."""

import json
import math
from dataclasses import replace
from pathlib import Path

import pandas as pd
import pytest

from seqmusic.bench import output
from seqmusic.bench.config import (
    PRESETS,
    ExperimentConfig,
    apply_overrides,
    default_config,
    preset,
    resolve_config,
)
from seqmusic.bench.runner import (
    SweepResult,
    TrialRecord,
    aggregate,
    monotonicity_warnings,
    run_sweep,
    run_trial,
    trial_seeds,
)
from seqmusic.errors import OutputPathError, ParameterError

HEADER = "algorithm,m,N,snr_db,tau,mean,trials,success_rate,stderr,mean_wall_time_ms"


def _small_config(tmp_path: Path | None = None, **changes) -> ExperimentConfig:
    cfg = ExperimentConfig(
        name="small",
        n=32,
        k=4,
        r=2,
        snapshots=(4,),
        m_values=(1, 12),
        trials=3,
        algorithms=("seq_cs_music", "cs_music"),
        record_timing=False,
        output_path=str(tmp_path / "out.csv") if tmp_path is not None else None,
    )
    return replace(cfg, **changes)


def test_default_config_matches_snapshot_setting():
    cfg = default_config()
    assert (cfg.n, cfg.k, cfg.r, cfg.snr_db) == (128, 8, 4, 30.0)
    assert cfg.m_values == tuple(range(1, 31))
    assert cfg.trials == 1000
    assert cfg.validate() is cfg


def test_presets():
    assert set(PRESETS) == {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6a", "fig6b", "fig7"}
    assert preset("fig3").snapshots == (6, 16, 256)
    assert preset("fig4").algorithms == ("seq_cs_music", "seq_no_filter", "cs_music")
    assert preset("fig7").matrix_family == "fourier"
    assert preset("fig7").scalar_field == "complex"
    assert preset("fig6a").taus == (1.0, 0.5)
    assert preset("fig6b").means == (0.0, 1.0)
    for cfg in PRESETS.values():
        cfg.validate()
    with pytest.raises(ParameterError, match="fig3"):
        preset("fig9")


def test_override_parsing():
    cfg = apply_overrides(
        default_config(),
        {"m": "1..3", "snapshots": "6,16", "SNR-DB": "inf", "algo": "s_omp", "filter_truncation": "auto"},
    )
    assert cfg.m_values == (1, 2, 3)
    assert cfg.snapshots == (6, 16)
    assert math.isinf(cfg.snr_db)
    assert cfg.algorithms == ("s_omp",)
    assert cfg.auto_truncation and cfg.filter_truncation is None
    with pytest.raises(ParameterError):
        apply_overrides(default_config(), {"colour": "blue"})
    with pytest.raises(ParameterError):
        apply_overrides(default_config(), {"trials": "many"})


def test_config_precedence(tmp_path):
    config_file = tmp_path / "sweep.env"
    config_file.write_text("trials=50\nm=16,20\nseed=7\n", encoding="utf-8")
    cfg = resolve_config("fig3", config_file, {"trials": 3})
    assert cfg.trials == 3
    assert cfg.m_values == (16, 20)
    assert cfg.master_seed == 7
    assert cfg.snapshots == (6, 16, 256)


def test_config_file_may_name_a_preset(tmp_path):
    config_file = tmp_path / "sweep.env"
    config_file.write_text("preset=fig5\ntrials=10\n", encoding="utf-8")
    cfg = resolve_config(None, config_file, None)
    assert cfg.name == "fig5"
    assert cfg.trials == 10
    with pytest.raises(ParameterError):
        resolve_config(None, tmp_path / "missing.env", None)


def test_config_validation():
    with pytest.raises(ParameterError):
        replace(default_config(), trials=0).validate()
    with pytest.raises(ParameterError):
        replace(default_config(), m_values=(0, 5)).validate()
    with pytest.raises(ParameterError):
        replace(default_config(), r=8, snapshots=(6,)).validate()
    with pytest.raises(ParameterError):
        replace(default_config(), algorithms=("lasso",)).validate()


def test_cache_key_ignores_run_only_fields():
    cfg = default_config()
    assert cfg.cache_key() == replace(cfg, trials=5, workers=4, output_path="x.csv", record_timing=False).cache_key()
    assert cfg.cache_key() != replace(cfg, snr_db=20.0).cache_key()


def test_trial_seeds_ignore_algorithm_and_depend_on_cell():
    cfg = _small_config()
    seeds = trial_seeds(cfg, 12, 4, 0, 1.0, 0.0)
    assert seeds == trial_seeds(replace(cfg, algorithms=("s_omp",)), 12, 4, 0, 1.0, 0.0)
    assert seeds != trial_seeds(cfg, 12, 4, 1, 1.0, 0.0)
    assert seeds != trial_seeds(replace(cfg, master_seed=1), 12, 4, 0, 1.0, 0.0)
    with pytest.raises(ParameterError):
        trial_seeds(cfg, 12, 4, 0, 0.5, 0.0)


def test_run_trial_is_deterministic():
    cfg = _small_config()
    first = run_trial(cfg, 12, 4, 2, "seq_cs_music")
    second = run_trial(cfg, 12, 4, 2, "seq_cs_music")
    assert first == second
    assert first.success == (set(first.estimated_support) == set(first.true_support))
    assert TrialRecord.from_dict(json.loads(json.dumps(first.to_dict()))) == first


def test_run_trial_with_one_measurement_fails_with_tag():
    record = run_trial(replace(default_config(), trials=1), 1, 6, 0, "seq_cs_music")
    assert not record.success
    assert record.error.startswith("ParameterError")
    assert record.estimated_support == ()
    assert len(record.true_support) == 8


def test_run_trial_noiseless_high_measurements():
    cfg = replace(default_config(), snr_db=math.inf, snapshots=(16,), trials=10)
    records = [run_trial(cfg, 24, 16, index, "seq_cs_music") for index in range(10)]
    assert sum(record.success for record in records) >= 9
    assert all("init" in record.stage_diagnostics for record in records)
    assert all("coeff_rel_error" in record.stage_diagnostics for record in records if record.success)


def test_aggregate_columns_and_standard_error():
    records = [
        TrialRecord(i, "seq_cs_music", 12, 4, 1.0, 0.0, (0,), (0,), success=i < 3) for i in range(4)
    ]
    summary = aggregate(records, _small_config())
    assert list(summary.columns) == output.SUMMARY_COLUMNS
    row = summary.iloc[0]
    assert row["trials"] == 4
    assert row["success_rate"] == pytest.approx(0.75)
    assert row["stderr"] == pytest.approx(math.sqrt(0.75 * 0.25 / 4))
    assert aggregate([], _small_config()).empty


def test_sweep_writes_formatted_csv_and_error_sidecar(tmp_path):
    cfg = _small_config(tmp_path)
    result = run_sweep(cfg)
    assert len(result.summary) == 4
    assert (result.summary["trials"] == 3).all()
    lines = (tmp_path / "out.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == HEADER
    assert lines[1] == "cs_music,1,4,30,1,0,3,0.00000,0,0"
    assert len(lines) == 5

    sidecar = output.sidecar_path(tmp_path / "out.csv")
    entries = [json.loads(line) for line in sidecar.read_text(encoding="utf-8").splitlines()]
    assert len(entries) == 6
    assert {entry["m"] for entry in entries} == {1}
    assert all(entry["error"].startswith("ParameterError") for entry in entries)


def test_stale_sidecar_is_removed(tmp_path):
    sidecar = output.sidecar_path(tmp_path / "out.csv")
    sidecar.write_text("old\n", encoding="utf-8")
    run_sweep(_small_config(tmp_path, m_values=(12,), trials=2))
    assert not sidecar.exists()


def test_sweep_is_identical_across_worker_counts(tmp_path):
    serial = _small_config(tmp_path, m_values=(8, 12), trials=4, output_path=str(tmp_path / "serial.csv"))
    parallel = replace(serial, workers=2, output_path=str(tmp_path / "parallel.csv"))
    run_sweep(serial)
    run_sweep(parallel)
    assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "parallel.csv").read_bytes()


def test_empty_summary_writes_header_only(tmp_path):
    cfg = _small_config()
    result = SweepResult(config=cfg, summary=aggregate([], cfg))
    target = output.emit_csv(result, tmp_path / "empty.csv")
    assert target.read_text(encoding="utf-8") == HEADER + "\n"


def test_unwritable_output_fails_before_running(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    cfg = _small_config(output_path=str(blocker / "out.csv"))
    with pytest.raises(OutputPathError):
        run_sweep(cfg)


def test_analysis_preset_is_not_a_recovery_sweep():
    with pytest.raises(ParameterError):
        run_sweep(preset("fig2"))


def test_sweep_resumes_from_cache(tmp_path):
    cache = str(tmp_path / "trials.sqlite")
    cfg = _small_config(m_values=(12,), trials=3)
    first = run_sweep(cfg, cache_path=cache)
    second = run_sweep(cfg, cache_path=cache)
    assert first.records == second.records
    pd.testing.assert_frame_equal(first.summary, second.summary)

    extended = run_sweep(replace(cfg, trials=5), cache_path=cache)
    assert len(extended.records) == 10
    assert extended.records[:3] == [record for record in first.records if record.algorithm == "cs_music"]


def test_monotonicity_warnings():
    summary = pd.DataFrame(
        {
            "algorithm": ["seq_cs_music"] * 2,
            "m": [10, 14],
            "N": [6, 6],
            "snr_db": [math.inf] * 2,
            "tau": [1.0, 1.0],
            "mean": [0.0, 0.0],
            "trials": [100, 100],
            "success_rate": [0.9, 0.2],
            "stderr": [0.03, 0.04],
            "mean_wall_time_ms": [0.0, 0.0],
        }
    )
    assert len(monotonicity_warnings(summary)) == 1
    summary["success_rate"] = [0.5, 0.6]
    assert monotonicity_warnings(summary) == []


def test_success_curves_pivot_per_panel():
    summary = pd.DataFrame(
        {
            "algorithm": ["cs_music", "seq_cs_music", "cs_music", "seq_cs_music"],
            "m": [10, 10, 12, 12],
            "N": [6, 6, 6, 6],
            "tau": [1.0] * 4,
            "mean": [0.0] * 4,
            "success_rate": [0.1, 0.3, 0.4, 0.8],
        }
    )
    panels = output.success_curves(summary)
    assert list(panels) == ["N=6 tau=1 mean=0"]
    table = panels["N=6 tau=1 mean=0"]
    assert list(table.index) == [10, 12]
    assert table.loc[12, "seq_cs_music"] == pytest.approx(0.8)


def test_cached_records_honour_no_timing(tmp_path):
    cache = str(tmp_path / "trials.sqlite")
    timed = _small_config(m_values=(12,), trials=2, record_timing=True)
    run_sweep(timed, cache_path=cache)

    untimed = replace(timed, record_timing=False, output_path=str(tmp_path / "cached.csv"))
    result = run_sweep(untimed, cache_path=cache)
    assert all(record.wall_time == 0.0 for record in result.records)
    run_sweep(replace(untimed, output_path=str(tmp_path / "fresh.csv")))
    assert (tmp_path / "cached.csv").read_bytes() == (tmp_path / "fresh.csv").read_bytes()


def test_explicit_truncation_flag_overrides_auto_from_file(tmp_path):
    config_file = tmp_path / "sweep.env"
    config_file.write_text("filter_truncation=auto\n", encoding="utf-8")
    assert resolve_config(None, config_file, None).auto_truncation

    cfg = resolve_config(None, config_file, {"filter_truncation": "6"})
    assert cfg.filter_truncation == 6
    assert not cfg.auto_truncation

    cfg = resolve_config(None, config_file, {"filter-truncation": "none"})
    assert cfg.filter_truncation is None
    assert not cfg.auto_truncation

    both = apply_overrides(default_config(), {"filter_truncation": "6", "auto_truncation": "true"})
    assert both.auto_truncation and both.filter_truncation == 6


def test_sweep_with_estimated_rank():
    cfg = _small_config(m_values=(12,), trials=3, snr_db=math.inf, estimate_rank=True)
    result = run_sweep(cfg)
    assert len(result.records) == 6
    assert all(record.error is None for record in result.records)
    assert all(record.stage_diagnostics["rank_used"] == 2 for record in result.records)
