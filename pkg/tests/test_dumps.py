"""Tests for parquet instance dumps."""

import math

import numpy as np
import pyarrow as pa
import pyarrow.parquet as pq
import pytest

from seqmusic.errors import ParameterError
from seqmusic.problems import gen_fourier_sensing, gen_gaussian_sensing, gen_ground_truth, synthesize
from seqmusic.storage.dumps import dump_instance, load_instance


def test_real_instance_round_trip(tmp_path):
    A = gen_gaussian_sensing(12, 40, 0.5, seed=1)
    truth = gen_ground_truth(40, 4, 2, 6, tau=0.5, seed=2)
    measurements = synthesize(A, truth, 20.0, seed=3)
    path = dump_instance(tmp_path / "instance.parquet", A, truth, measurements)

    A2, truth2, measurements2 = load_instance(path)
    assert np.array_equal(A2.matrix, A.matrix)
    assert not np.iscomplexobj(A2.matrix)
    assert (A2.family, A2.seed, A2.mean) == (A.family, A.seed, A.mean)
    assert truth2.support == truth.support
    assert np.array_equal(truth2.coeffs, truth.coeffs)
    assert (truth2.rank_r, truth2.tau, truth2.seed) == (2, 0.5, truth.seed)
    assert np.array_equal(measurements2.Y, measurements.Y)
    assert np.array_equal(measurements2.noiseless, measurements.noiseless)
    assert measurements2.snr_db == 20.0


def test_complex_noiseless_round_trip(tmp_path):
    A = gen_fourier_sensing(8, 32, seed=4)
    truth = gen_ground_truth(32, 3, 2, 5, seed=5, field_kind="complex")
    measurements = synthesize(A, truth, math.inf, seed=6)
    A2, truth2, measurements2 = load_instance(dump_instance(tmp_path / "fourier.parquet", A, truth, measurements))
    assert np.iscomplexobj(A2.matrix)
    assert np.array_equal(A2.matrix, A.matrix)
    assert np.array_equal(truth2.coeffs, truth.coeffs)
    assert np.array_equal(measurements2.Y, measurements.Y)
    assert math.isinf(measurements2.snr_db)


def test_load_rejects_foreign_parquet(tmp_path):
    path = tmp_path / "other.parquet"
    pq.write_table(pa.table({"x": [1, 2]}), path)
    with pytest.raises(ParameterError):
        load_instance(path)
