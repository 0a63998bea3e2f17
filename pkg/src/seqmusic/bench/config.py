"""Experiment configuration, presets and key-value overrides."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values

from seqmusic.errors import ParameterError
from seqmusic.problems import MatrixFamily
from seqmusic.recovery.pipeline import ALGORITHMS
from seqmusic.recovery.support import InitAlgorithm

KIND_RECOVERY = "recovery"
KIND_SIGMA_PROFILE = "sigma_profile"
KIND_FEASIBILITY = "feasibility"
KINDS = (KIND_RECOVERY, KIND_SIGMA_PROFILE, KIND_FEASIBILITY)

DEFAULT_M_VALUES = tuple(range(1, 31))

# Fields that never change a trial outcome
_RUN_ONLY_FIELDS = ("name", "trials", "workers", "output_path", "record_timing")


@dataclass(frozen=True)
class ExperimentConfig:
    """Monte Carlo sweep over (algorithm, m, N, tau, mean) cells."""

    name: str = "custom"
    kind: str = KIND_RECOVERY
    matrix_family: str = MatrixFamily.GAUSSIAN.value
    means: tuple[float, ...] = (0.0,)
    n: int = 128
    k: int = 8
    r: int = 4
    snapshots: tuple[int, ...] = (6,)
    m_values: tuple[int, ...] = DEFAULT_M_VALUES
    snr_db: float = 30.0
    taus: tuple[float, ...] = (1.0,)
    trials: int = 1000
    master_seed: int = 0
    algorithms: tuple[str, ...] = ("seq_cs_music", "cs_music")
    init_algo: str = InitAlgorithm.SUBSPACE_S_OMP.value
    filter_truncation: Optional[int] = None
    auto_truncation: bool = False
    estimate_rank: bool = False
    rank_rel_tol: float = 1e-8
    grid_step: float = 0.01
    record_timing: bool = True
    workers: int = 1
    output_path: Optional[str] = None

    @property
    def scalar_field(self) -> str:
        return "complex" if self.matrix_family == MatrixFamily.FOURIER.value else "real"

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ParameterError(f"unknown experiment kind {self.kind!r}", {"valid": KINDS})
        if self.matrix_family not in {family.value for family in MatrixFamily}:
            raise ParameterError(f"unknown matrix family {self.matrix_family!r}")
        if self.trials < 1:
            raise ParameterError("trials must be at least 1", {"trials": self.trials})
        if self.master_seed < 0:
            raise ParameterError("master seed must be non-negative", {"seed": self.master_seed})
        if self.workers < 1:
            raise ParameterError("workers must be at least 1", {"workers": self.workers})
        if not 1 <= self.r <= self.k < self.n:
            raise ParameterError("need 1 <= r <= k < n", {"n": self.n, "k": self.k, "r": self.r})
        if not self.m_values or any(m < 1 or m >= self.n for m in self.m_values):
            raise ParameterError("every m must satisfy 1 <= m < n", {"m": self.m_values, "n": self.n})
        if not self.snapshots or any(self.r > N for N in self.snapshots):
            raise ParameterError("r must not exceed any snapshot count", {"r": self.r, "N": self.snapshots})
        if not self.taus or any(not 0.0 < tau <= 1.0 for tau in self.taus):
            raise ParameterError("tau values must lie in (0, 1]", {"tau": self.taus})
        if not self.means:
            raise ParameterError("at least one mean is required")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ParameterError("snr_db must be finite or +inf", {"snr_db": self.snr_db})
        unknown = [name for name in self.algorithms if name not in ALGORITHMS]
        if unknown or (self.kind == KIND_RECOVERY and not self.algorithms):
            raise ParameterError("unknown or missing algorithms", {"unknown": unknown, "valid": sorted(ALGORITHMS)})
        if self.init_algo not in {algo.value for algo in InitAlgorithm}:
            raise ParameterError(f"unknown init algorithm {self.init_algo!r}")
        if self.filter_truncation is not None and self.filter_truncation < 1:
            raise ParameterError("filter_truncation must be positive", {"filter_truncation": self.filter_truncation})
        if not 0.0 < self.rank_rel_tol < 1.0:
            raise ParameterError("rank_rel_tol must lie in (0, 1)", {"rank_rel_tol": self.rank_rel_tol})
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def cache_key(self) -> str:
        """Stable digest of the fields that determine trial outcomes."""
        payload = {key: value for key, value in self.to_dict().items() if key not in _RUN_ONLY_FIELDS}
        encoded = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(encoded).hexdigest()[:32]


def default_config() -> ExperimentConfig:
    """Build the default sweep config (snapshot-robustness setting)."""
    return ExperimentConfig()


_FIG3 = ExperimentConfig(name="fig3", snapshots=(6, 16, 256))

PRESETS: Dict[str, ExperimentConfig] = {
    "fig1": ExperimentConfig(
        name="fig1", kind=KIND_SIGMA_PROFILE, k=8, r=6, snapshots=(16,), m_values=(32,), snr_db=math.inf, trials=100
    ),
    "fig2": ExperimentConfig(name="fig2", kind=KIND_FEASIBILITY, trials=1),
    "fig3": _FIG3,
    "fig4": replace(_FIG3, name="fig4", snapshots=(6, 16), algorithms=("seq_cs_music", "seq_no_filter", "cs_music")),
    "fig5": replace(_FIG3, name="fig5", snapshots=(8, 256), algorithms=("seq_cs_music", "cs_music", "s_omp")),
    "fig6a": replace(_FIG3, name="fig6a", snapshots=(64,), taus=(1.0, 0.5)),
    "fig6b": replace(_FIG3, name="fig6b", snapshots=(64,), means=(0.0, 1.0)),
    "fig7": replace(
        _FIG3,
        name="fig7",
        matrix_family=MatrixFamily.FOURIER.value,
        snapshots=(5,),
        algorithms=("seq_cs_music", "cs_music", "s_omp"),
    ),
}


def preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}") from None


def _parse_int_list(value: Any) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    if isinstance(value, int):
        return (value,)
    text = str(value).strip()
    if ".." in text:
        start, stop = text.split("..", 1)
        return tuple(range(int(start), int(stop) + 1))
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_float(value: Any) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    return float(str(value).strip())


def _parse_float_list(value: Any) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(_parse_float(part) for part in str(value).split(",") if part.strip())


def _parse_str_list(value: Any) -> tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(str(v) for v in value)
    return tuple(part.strip() for part in str(value).split(",") if part.strip())


def _parse_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in {"1", "true", "yes", "on"}:
        return True
    if text in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_optional_int(value: Any) -> Optional[int]:
    if value is None or str(value).strip().lower() in {"", "none"}:
        return None
    return int(value)


# Accepted override keys (normalized) -> (field, parser)
_OVERRIDES = {
    "name": ("name", str),
    "kind": ("kind", str),
    "matrix": ("matrix_family", str),
    "matrix_family": ("matrix_family", str),
    "mean": ("means", _parse_float_list),
    "means": ("means", _parse_float_list),
    "n": ("n", int),
    "k": ("k", int),
    "r": ("r", int),
    "snapshots": ("snapshots", _parse_int_list),
    "m": ("m_values", _parse_int_list),
    "m_values": ("m_values", _parse_int_list),
    "snr_db": ("snr_db", _parse_float),
    "tau": ("taus", _parse_float_list),
    "taus": ("taus", _parse_float_list),
    "trials": ("trials", int),
    "seed": ("master_seed", int),
    "master_seed": ("master_seed", int),
    "algorithms": ("algorithms", _parse_str_list),
    "algo": ("algorithms", _parse_str_list),
    "init_algo": ("init_algo", str),
    "filter_truncation": ("filter_truncation", _parse_optional_int),
    "auto_truncation": ("auto_truncation", _parse_bool),
    "estimate_rank": ("estimate_rank", _parse_bool),
    "rank_rel_tol": ("rank_rel_tol", _parse_float),
    "grid_step": ("grid_step", _parse_float),
    "record_timing": ("record_timing", _parse_bool),
    "workers": ("workers", int),
    "out": ("output_path", str),
    "output_path": ("output_path", str),
}


def _normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def apply_overrides(cfg: ExperimentConfig, overrides: Mapping[str, Any]) -> ExperimentConfig:
    """
    Return ``cfg`` with the given key-value overrides applied.

    Keys are case-insensitive and accept '-' for '_'. String values are
    parsed (lists as '6,16,256', inclusive ranges as '1..30');
    ``filter_truncation=auto`` switches on the redundancy-based truncation;
    an explicit bound (or ``none``) switches it off unless ``auto_truncation``
    is given in the same mapping.
    """
    changes: Dict[str, Any] = {}
    explicit_auto = any(_normalize_key(key) == "auto_truncation" for key in overrides)
    for raw_key, value in overrides.items():
        if value is None:
            continue
        key = _normalize_key(raw_key)
        if key == "filter_truncation" and str(value).strip().lower() == "auto":
            changes["auto_truncation"] = True
            changes["filter_truncation"] = None
            continue
        if key not in _OVERRIDES:
            raise ParameterError(f"unknown configuration key {raw_key!r}", {"valid": sorted(_OVERRIDES)})
        field_name, parser = _OVERRIDES[key]
        try:
            changes[field_name] = parser(value)
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"invalid value for {raw_key!r}: {value!r}") from exc
        if key == "filter_truncation" and not explicit_auto:
            changes["auto_truncation"] = False
    known = {f.name for f in fields(ExperimentConfig)}
    return replace(cfg, **{key: value for key, value in changes.items() if key in known})


def load_config_file(path: str | Path) -> Dict[str, Optional[str]]:
    """Read a KEY=value config file."""
    config_path = Path(path)
    if not config_path.is_file():
        raise ParameterError("config file not found", {"path": str(config_path)})
    return dict(dotenv_values(config_path))


def resolve_config(
    preset_name: Optional[str] = None,
    config_file: Optional[str | Path] = None,
    cli_overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """Defaults < preset < config file < CLI flags."""
    cfg = preset(preset_name) if preset_name else default_config()
    if config_file:
        file_values = load_config_file(config_file)
        if not preset_name and file_values.get("preset"):
            cfg = preset(str(file_values["preset"]))
        file_values.pop("preset", None)
        cfg = apply_overrides(cfg, file_values)
    if cli_overrides:
        cfg = apply_overrides(cfg, cli_overrides)
    return cfg.validate()
