"""Multiview video traffic statistics and bufferless statistical multiplexing."""

from ._core import (  # noqa: F401
    Error,
    LossEstimate,
    MultiviewTrace,
    ParseError,
    PreconditionError,
    StreamStats,
    TraceMeta,
    ValidationError,
    average_psnr,
    combine,
    combined_variability,
    demand,
    demand_cov,
    estimate_loss,
    exact_loss_oracle,
    find_cmin,
    find_jmax,
    gop_smooth,
    load_trace,
    merged_mean,
    parse_trace,
    sequential_merge,
    sequential_variability,
    serialize_trace,
    shaped_cov,
    simulate_replication,
    synthesize_trace,
    trace_from_sizes,
    validate,
    view_stats,
)

__version__ = "0.1.0"
