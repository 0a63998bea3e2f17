"""Tests for greedy initializers, MUSIC criteria, support filtering and the pipelines."""

import math

import numpy as np
import pytest

from seqmusic.errors import (
    DegenerateDictionaryError,
    IllPosedAugmentationError,
    ParameterError,
    RankDeficiencyError,
)
from seqmusic.problems import gen_fourier_sensing, gen_gaussian_sensing, gen_ground_truth, synthesize
from seqmusic.recovery import (
    ALGORITHMS,
    RecoveryConfig,
    SupportEstimate,
    classical_music,
    debias,
    filter_truncation_bound,
    generalized_music,
    run_algorithm,
    s_omp,
    seq_cs_music,
    seq_subspace,
    subspace_s_omp,
    support_filtering,
    two_thresholding,
)
from seqmusic.subspace import Subspace, concatenate, principal_subspace, residual_energies


def _build_problem(m, n, k, r, N=16, snr_db=math.inf, seed=0, fourier=False):
    A = gen_fourier_sensing(m, n, seed) if fourier else gen_gaussian_sensing(m, n, 0.0, seed)
    gt = gen_ground_truth(n, k, r, N, 1.0, seed + 1000, "complex" if fourier else "real")
    ensemble = synthesize(A, gt, snr_db, seed + 2000)
    return A, gt, ensemble


def _signal_subspace(ensemble, r):
    return principal_subspace(ensemble.Y, r)


def test_support_estimate_validation():
    with pytest.raises(ParameterError):
        SupportEstimate((1, 1))
    with pytest.raises(ParameterError):
        SupportEstimate((1, 2), (0.5,))
    estimate = SupportEstimate((3,), (0.1,)).extended(5, 0.2)
    assert estimate.indices == (3, 5)
    assert estimate.as_set() == frozenset({3, 5})


def test_recovery_config_validation():
    assert RecoveryConfig(k=8, r=4, init_algo="two_thresholding").to_dict()["init_algo"] == "two_thresholding"
    with pytest.raises(ParameterError):
        RecoveryConfig(k=4, r=5)
    with pytest.raises(ParameterError):
        RecoveryConfig(k=4, r=2, filter_truncation=0)


def test_two_thresholding_identity_dictionary():
    U = Subspace(np.eye(4)[:, [1]])
    assert two_thresholding(np.eye(4), U, 1).indices == (1,)
    # Ties keep the natural order after the best atom
    assert two_thresholding(np.eye(4), U, 4).indices == (1, 0, 2, 3)


def test_two_thresholding_recovers_full_rank_support():
    hits = 0
    for seed in range(20):
        A, gt, ensemble = _build_problem(64, 128, 4, 4, N=8, seed=seed)
        hits += two_thresholding(A, _signal_subspace(ensemble, 4), 4).as_set() == set(gt.support)
    assert hits >= 18


def test_subspace_s_omp_zero_atoms_and_range():
    U = Subspace(np.eye(3)[:, [0]])
    assert len(subspace_s_omp(np.eye(3), U, 0)) == 0
    with pytest.raises(ParameterError):
        subspace_s_omp(np.eye(3), U, 4)


def test_subspace_s_omp_degenerate_dictionary():
    A = np.array([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]])
    U = Subspace(np.eye(2)[:, [0]])
    with pytest.raises(DegenerateDictionaryError):
        subspace_s_omp(A, U, 2)


def test_subspace_s_omp_picks_support_first_when_noiseless():
    A, gt, ensemble = _build_problem(40, 128, 6, 6, N=8, seed=3)
    estimate = subspace_s_omp(A, _signal_subspace(ensemble, 6), 6)
    assert estimate.as_set() == set(gt.support)
    assert all(score == pytest.approx(1.0) for score in estimate.scores)


def test_s_omp_on_orthonormal_dictionary():
    Y = np.zeros((6, 3))
    Y[1] = [1.0, 2.0, 3.0]
    Y[4] = [0.5, -1.0, 0.0]
    assert s_omp(np.eye(6), Y, 2).as_set() == {1, 4}


def test_generalized_music_completes_correct_partial():
    A, gt, ensemble = _build_problem(24, 96, 8, 4, seed=4)
    U = _signal_subspace(ensemble, 4)
    partial = SupportEstimate(gt.support[:4])
    estimate = generalized_music(A, U, partial, 8)
    assert estimate.indices[:4] == gt.support[:4]
    assert estimate.as_set() == set(gt.support)


def test_generalized_music_rejects_ill_posed_augmentation():
    A = np.array([[1.0, 0.0, 0.0, 0.6], [0.0, 1.0, 0.0, 0.8], [0.0, 0.0, 1.0, 0.0]])
    U = Subspace(np.eye(3)[:, [0]])
    with pytest.raises(IllPosedAugmentationError):
        generalized_music(A, U, SupportEstimate((0,)), 2)
    with pytest.raises(ParameterError):
        generalized_music(A, U, SupportEstimate((0, 1)), 2)


def test_generalized_music_criterion_fails_with_wrong_partial_index():
    for seed in range(10):
        A, gt, ensemble = _build_problem(24, 128, 8, 4, seed=seed)
        U = _signal_subspace(ensemble, 4)
        wrong = next(j for j in range(128) if j not in gt.support)
        partial = gt.support[:3] + (wrong,)
        span = principal_subspace(concatenate(A.matrix[:, list(partial)], U), 8)
        missing = [j for j in gt.support if j not in partial]
        assert max(residual_energies(span, A.matrix[:, missing])) > 1e-8
        assert generalized_music(A, U, SupportEstimate(partial), 8).as_set() != set(gt.support)


def test_classical_music_exact_when_rank_equals_sparsity():
    A, gt, ensemble = _build_problem(20, 64, 4, 4, N=8, seed=6)
    assert classical_music(A, _signal_subspace(ensemble, 4), 4).as_set() == set(gt.support)


def test_seq_subspace_rank_deficiency_and_init_size():
    A = gen_gaussian_sensing(3, 6, 0.0, 1).matrix
    U = Subspace(np.eye(3)[:, [0]])
    with pytest.raises(RankDeficiencyError):
        seq_subspace(A, U, SupportEstimate((0, 1, 2)), 4)
    A, gt, ensemble = _build_problem(24, 96, 8, 4, seed=2)
    with pytest.raises(ParameterError):
        seq_subspace(A, _signal_subspace(ensemble, 4), SupportEstimate(gt.support[:2]), 8)


def test_seq_subspace_completes_noiseless_partial():
    A, gt, ensemble = _build_problem(24, 128, 8, 4, seed=8)
    estimate = seq_subspace(A, _signal_subspace(ensemble, 4), SupportEstimate(gt.support[:5]), 8)
    assert estimate.as_set() == set(gt.support)
    assert len(estimate.scores) == 8


def test_support_filtering_removes_planted_wrong_atoms():
    for seed in range(20):
        A, gt, ensemble = _build_problem(24, 128, 8, 4, seed=seed)
        wrong = [j for j in range(128) if j not in gt.support][seed : seed + 2]
        I = SupportEstimate(gt.support[:6] + tuple(wrong))
        kept = support_filtering(A, _signal_subspace(ensemble, 4), I, 8, 4)
        assert len(kept) == 4
        assert kept.as_set() <= set(gt.support)
        assert max(kept.scores) < 1e-14


def test_support_filtering_edge_cases():
    A, gt, ensemble = _build_problem(24, 128, 8, 4, seed=1)
    U = _signal_subspace(ensemble, 4)
    I = SupportEstimate(gt.support)
    assert support_filtering(A, U, I, 8, 4, truncation=5).as_set() <= set(gt.support)
    with pytest.raises(ParameterError):
        support_filtering(A, U, I, 8, 4, truncation=4)
    with pytest.raises(ParameterError):
        support_filtering(A, U, I, 8, 3)

    square = _signal_subspace(_build_problem(24, 128, 4, 4, N=8, seed=1)[2], 4)
    assert len(support_filtering(A, square, SupportEstimate((0, 1, 2, 3)), 4, 4)) == 0


def test_filter_truncation_bound():
    assert filter_truncation_bound(24, 8, 4) == (4, None)
    assert filter_truncation_bound(12, 8, 6) == (2, 6)
    assert filter_truncation_bound(4, 8, 6) == (1, 5)


def test_seq_cs_music_noiseless_high_measurements():
    hits = 0
    for seed in range(20):
        A, gt, ensemble = _build_problem(30, 128, 8, 4, seed=seed)
        estimate = seq_cs_music(A, ensemble, 8, 4, RecoveryConfig(k=8, r=4))
        hits += estimate.as_set() == set(gt.support)
        assert set(estimate.stages) == {"init", "filtered"}
        assert len(estimate.stages["init"]) == 8
        assert len(estimate.stages["filtered"]) == 4
    assert hits >= 19


def test_seq_cs_music_auto_truncation_notes():
    A, _, ensemble = _build_problem(30, 128, 8, 4, seed=1)
    estimate = seq_cs_music(A, ensemble, 8, 4, RecoveryConfig(k=8, r=4, auto_truncation=True))
    assert estimate.notes["l_estimate"] == 4
    assert estimate.notes["truncation"] is None


def test_seq_cs_music_with_full_rank_matches_music():
    A, gt, ensemble = _build_problem(20, 64, 4, 4, N=8, seed=5)
    sequential = seq_cs_music(A, ensemble, 4, 4)
    assert sequential.as_set() == set(gt.support)
    assert sequential.as_set() == classical_music(A, _signal_subspace(ensemble, 4), 4).as_set()
    assert len(sequential.stages["filtered"]) == 0


def test_seq_cs_music_config_mismatch():
    A, _, ensemble = _build_problem(30, 128, 8, 4, seed=1)
    with pytest.raises(ParameterError):
        seq_cs_music(A, ensemble, 8, 4, RecoveryConfig(k=8, r=3))
    with pytest.raises(ParameterError):
        seq_cs_music(A, ensemble, 8, 9)


def test_every_registered_algorithm_runs_on_noiseless_instance():
    A, gt, ensemble = _build_problem(40, 128, 8, 4, seed=12)
    for name in ALGORITHMS:
        estimate = run_algorithm(name, A, ensemble, 8, 4)
        assert len(estimate) == 8
        assert estimate.as_set() <= set(range(128))
    with pytest.raises(ParameterError):
        run_algorithm("lasso", A, ensemble, 8, 4)


def test_two_thresholding_initializer_in_pipeline():
    A, gt, ensemble = _build_problem(40, 128, 8, 4, seed=13)
    estimate = seq_cs_music(A, ensemble, 8, 4, RecoveryConfig(k=8, r=4, init_algo="two_thresholding"))
    assert len(estimate) == 8


def test_complex_fourier_pipeline_noiseless():
    hits = 0
    for seed in range(5):
        A, gt, ensemble = _build_problem(40, 64, 4, 2, N=5, seed=seed, fourier=True)
        hits += seq_cs_music(A, ensemble, 4, 2).as_set() == set(gt.support)
    assert hits >= 4


def test_debias_recovers_coefficients_on_true_support():
    A, gt, ensemble = _build_problem(24, 96, 6, 3, seed=3)
    coeffs = debias(A, ensemble, gt.support)
    assert np.allclose(coeffs, gt.coeffs, atol=1e-10)
    assert debias(A, ensemble, ()).shape == (0, 16)


def test_seq_subspace_single_step_matches_generalized_music():
    for seed in range(10):
        A, gt, ensemble = _build_problem(24, 96, 6, 1, snr_db=30.0, seed=seed)
        U = _signal_subspace(ensemble, 1)
        init = subspace_s_omp(A, U, 5)
        assert seq_subspace(A, U, init, 6).indices == generalized_music(A, U, init, 6).indices


def test_subspace_s_omp_full_rank_success_rate():
    hits = 0
    for seed in range(100):
        A, gt, ensemble = _build_problem(32, 128, 8, 8, N=16, seed=seed)
        hits += subspace_s_omp(A, _signal_subspace(ensemble, 8), 8).as_set() == set(gt.support)
    assert hits >= 95


def test_seq_cs_music_is_permutation_equivariant():
    for seed in range(5):
        A, gt, ensemble = _build_problem(20, 64, 6, 3, snr_db=30.0, seed=seed)
        perm = np.random.default_rng(seed).permutation(64)
        original = seq_cs_music(A, ensemble, 6, 3)
        permuted = seq_cs_music(A.matrix[:, perm], ensemble, 6, 3)
        assert tuple(int(perm[j]) for j in permuted.indices) == original.indices
        for stage in ("init", "filtered"):
            mapped = tuple(int(perm[j]) for j in permuted.stages[stage].indices)
            assert mapped == original.stages[stage].indices
