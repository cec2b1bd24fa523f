"""Approximating sparse right-stochastic matrices with fixed self-attention.

A library for constructing self-attention inputs whose attention matrix
matches a given sparse right-stochastic target up to row-ratio tolerances,
for measuring how the smallest sufficient attention width grows with the
sequence length, and for benchmarking the concentration of dot products
under orthogonal random projections.
"""

from .attention import csam, logits, sam
from .concentration import (
    JltParams,
    project_pair,
    run_bench,
    tail_estimate,
    theoretical_tail,
)
from .construct import (
    AttentionInputs,
    Factorization,
    LogGapMatrix,
    ProjectionPair,
    assemble,
    build_log_gap,
    compress,
    reconstruct_target,
    sample_stiefel,
    svd_factor,
)
from .matrices import (
    ApproxParams,
    SparseStochasticMatrix,
    ValidationReport,
    generate,
    min_nonzero_rows,
    read_coo,
    validate,
    write_coo,
)
from .render import RenderSpec, pooled_pixels, read_pgm, render_pgm
from .sweep import (
    SweepConfig,
    SweepRecord,
    find_dmin,
    log_fit,
    q_sweep,
    run_sweep,
    theoretical_d,
)
from .verify import ApproxReport, check_conditions, check_direct

__all__ = [
    "ApproxParams",
    "ApproxReport",
    "AttentionInputs",
    "Factorization",
    "JltParams",
    "LogGapMatrix",
    "ProjectionPair",
    "RenderSpec",
    "SparseStochasticMatrix",
    "SweepConfig",
    "SweepRecord",
    "ValidationReport",
    "assemble",
    "build_log_gap",
    "check_conditions",
    "check_direct",
    "compress",
    "csam",
    "find_dmin",
    "generate",
    "log_fit",
    "logits",
    "min_nonzero_rows",
    "pooled_pixels",
    "project_pair",
    "q_sweep",
    "read_coo",
    "read_pgm",
    "reconstruct_target",
    "render_pgm",
    "run_bench",
    "run_sweep",
    "sam",
    "sample_stiefel",
    "svd_factor",
    "tail_estimate",
    "theoretical_d",
    "theoretical_tail",
    "validate",
    "write_coo",
]
