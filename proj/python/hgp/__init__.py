"""Basis-function GP regression with Hankel-Toeplitz structured precision matrices."""

from ._hgp import (
    ComplexExponential,
    Fourier1D,
    GammaTensor,
    Hilbert,
    Hyperparams,
    IoError,
    Level,
    LevelKind,
    LevelStructure,
    OptimizeConfig,
    OptimizeResult,
    Polynomial,
    Posterior,
    PrecisionSummary,
    UnsupportedError,
    accumulate_gamma,
    accumulate_naive,
    accumulate_stats,
    dense_gp_posterior,
    dense_storage_bytes,
    eval_bf_1d,
    family_from_json,
    family_name,
    family_to_json,
    feature_count,
    fourier_gamma_1d,
    g_function,
    gamma_storage_bytes,
    hankel_entry_index,
    input_dim,
    merge,
    merge_summaries,
    neg_log_marginal_likelihood,
    nlpd,
    optimize_hyperparameters,
    posterior,
    read_summary_file,
    reconstruct_precision,
    regressor_row,
    spectral_weights,
    structure_descriptors,
    toeplitz_entry_index,
    update_stats,
    write_summary_file,
)

__all__ = [
    "ComplexExponential",
    "Fourier1D",
    "GammaTensor",
    "Hilbert",
    "Hyperparams",
    "IoError",
    "Level",
    "LevelKind",
    "LevelStructure",
    "OptimizeConfig",
    "OptimizeResult",
    "Polynomial",
    "Posterior",
    "PrecisionSummary",
    "UnsupportedError",
    "accumulate_gamma",
    "accumulate_naive",
    "accumulate_stats",
    "dense_gp_posterior",
    "dense_storage_bytes",
    "eval_bf_1d",
    "family_from_json",
    "family_name",
    "family_to_json",
    "feature_count",
    "fourier_gamma_1d",
    "g_function",
    "gamma_storage_bytes",
    "hankel_entry_index",
    "input_dim",
    "merge",
    "merge_summaries",
    "neg_log_marginal_likelihood",
    "nlpd",
    "optimize_hyperparameters",
    "posterior",
    "read_summary_file",
    "reconstruct_precision",
    "regressor_row",
    "spectral_weights",
    "structure_descriptors",
    "toeplitz_entry_index",
    "update_stats",
    "write_summary_file",
]

__version__ = "0.1.0"
