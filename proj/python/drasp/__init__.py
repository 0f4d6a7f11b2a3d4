"""Dual-resolution attentive statistics pooling and its baselines.

Thin wrapper over the C++ core: pooling operators take a T x d frame array
and attention heads given as (W, b, v) tuples.
"""

from ._drasp import (
    BenchConfig,
    attention_weights,
    attentive_pool,
    attentive_statistics_pool,
    average_pool,
    average_ranks,
    clamped_sqrt,
    drasp_pool,
    drasp_pool_backward,
    generate,
    ktau,
    lcc,
    mse,
    multihead_attentive_pool,
    multires_multihead_attentive_pool,
    pooling_methods,
    segment_average,
    segmental_attentive_statistics_pool,
    softmax,
    srcc,
    statistics_pool,
    system_aggregate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
