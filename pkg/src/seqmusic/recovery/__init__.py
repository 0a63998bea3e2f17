"""Support recovery algorithms."""

from seqmusic.recovery.greedy import s_omp, subspace_s_omp, two_thresholding
from seqmusic.recovery.music import (
    classical_music,
    filter_truncation_bound,
    generalized_music,
    seq_subspace,
    support_filtering,
)
from seqmusic.recovery.pipeline import ALGORITHMS, debias, run_algorithm, seq_cs_music
from seqmusic.recovery.support import InitAlgorithm, RecoveryConfig, SupportEstimate

__all__ = [
    "ALGORITHMS",
    "InitAlgorithm",
    "RecoveryConfig",
    "SupportEstimate",
    "classical_music",
    "debias",
    "filter_truncation_bound",
    "generalized_music",
    "run_algorithm",
    "s_omp",
    "seq_cs_music",
    "seq_subspace",
    "subspace_s_omp",
    "support_filtering",
    "two_thresholding",
]
