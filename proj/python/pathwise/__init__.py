"""Pathwise stochastic calculus on sampled continuous paths."""

from ._core import (
    QVMatrixPath,
    SampledPath,
    bdg_sweep,
    black_scholes_exact,
    hedge_sequence,
    load_path,
    merged_partition,
    qv,
    qv_level,
    qv_path,
    random_walk,
    resolution_level,
    save_path,
    scalar_partition,
    solve,
    verify_pathwise_bdg,
    window_thresholds,
)

__all__ = [
    "QVMatrixPath",
    "SampledPath",
    "bdg_sweep",
    "black_scholes_exact",
    "hedge_sequence",
    "load_path",
    "merged_partition",
    "qv",
    "qv_level",
    "qv_path",
    "random_walk",
    "resolution_level",
    "save_path",
    "scalar_partition",
    "solve",
    "verify_pathwise_bdg",
    "window_thresholds",
]
