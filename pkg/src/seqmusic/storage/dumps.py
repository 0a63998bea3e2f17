"""
Parquet dumps of single problem instances.

Every matrix is stored in long form (matrix, position, real, imag) with
column-major positions; shapes, seeds and the support travel as JSON in the
file's schema metadata.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from seqmusic.errors import OutputPathError, ParameterError
from seqmusic.problems import GroundTruth, MatrixFamily, MeasurementEnsemble, SensingMatrix

logger = logging.getLogger(__name__)

METADATA_KEY = b"seqmusic"


def _long_form(name: str, matrix: np.ndarray) -> pd.DataFrame:
    flat = np.asarray(matrix).ravel(order="F")
    return pd.DataFrame(
        {
            "matrix": name,
            "position": np.arange(flat.size, dtype=np.int64),
            "real": np.real(flat).astype(np.float64),
            "imag": np.imag(flat).astype(np.float64),
        }
    )


def _restore(frame: pd.DataFrame, name: str, shape: list[int], is_complex: bool) -> np.ndarray:
    part = frame[frame["matrix"] == name].sort_values("position")
    values = part["real"].to_numpy() + (1j * part["imag"].to_numpy() if is_complex else 0.0)
    return np.asarray(values).reshape(shape, order="F")


def dump_instance(
    path: str | Path, A: SensingMatrix, truth: GroundTruth, measurements: MeasurementEnsemble
) -> Path:
    """Write one instance to a parquet file."""
    target = Path(path)
    arrays = {"A": A.matrix, "coeffs": truth.coeffs, "Y": measurements.Y}
    if measurements.noiseless is not None:
        arrays["B"] = measurements.noiseless
    metadata: Dict[str, Any] = {
        "family": A.family.value if isinstance(A.family, MatrixFamily) else str(A.family),
        "matrix_seed": A.seed,
        "mean": A.mean,
        "n": truth.n,
        "support": list(truth.support),
        "rank_r": truth.rank_r,
        "tau": truth.tau,
        "truth_seed": truth.seed,
        "resamples": truth.resamples,
        "snr_db": measurements.snr_db,
        "noise_seed": measurements.noise_seed,
        "complex": {name: bool(np.iscomplexobj(value)) for name, value in arrays.items()},
        "shapes": {name: list(np.shape(value)) for name, value in arrays.items()},
    }

    frame = pd.concat([_long_form(name, value) for name, value in arrays.items()], ignore_index=True)
    table = pa.Table.from_pandas(frame, preserve_index=False)
    existing = table.schema.metadata or {}
    table = table.replace_schema_metadata({**existing, METADATA_KEY: json.dumps(metadata, default=str).encode("utf-8")})
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        pq.write_table(table, target)
    except OSError as exc:
        raise OutputPathError("failed to write instance dump", {"path": str(target)}) from exc
    logger.info("Dumped instance (m=%s, n=%s, N=%s) to %s", A.m, A.n, truth.snapshots, target)
    return target


def load_instance(path: str | Path) -> tuple[SensingMatrix, GroundTruth, MeasurementEnsemble]:
    """Read an instance written by dump_instance."""
    table = pq.read_table(Path(path))
    raw = (table.schema.metadata or {}).get(METADATA_KEY)
    if raw is None:
        raise ParameterError("parquet file carries no instance metadata", {"path": str(path)})
    metadata = json.loads(raw.decode("utf-8"))
    frame = table.to_pandas()
    shapes = metadata["shapes"]
    arrays = {name: _restore(frame, name, shape, bool(metadata["complex"][name])) for name, shape in shapes.items()}

    A = SensingMatrix(arrays["A"], MatrixFamily(metadata["family"]), int(metadata["matrix_seed"]), float(metadata["mean"]))
    truth = GroundTruth(
        n=int(metadata["n"]),
        support=tuple(int(j) for j in metadata["support"]),
        coeffs=arrays["coeffs"],
        rank_r=int(metadata["rank_r"]),
        tau=float(metadata["tau"]),
        seed=int(metadata["truth_seed"]),
        resamples=int(metadata["resamples"]),
    )
    measurements = MeasurementEnsemble(
        Y=arrays["Y"],
        snr_db=float(metadata["snr_db"]),
        noise_seed=int(metadata["noise_seed"]),
        noiseless=arrays.get("B"),
    )
    return A, truth, measurements
