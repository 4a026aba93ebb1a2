"""Throughput and delay analysis of ARQ over Gilbert-Elliott erasure channels.

Analytic matrix-generating-function models of a two-packet
cumulative-feedback ARQ protocol and its single-packet selective-repeat
baseline, cross-validated by a slot-synchronous Monte Carlo simulator.
"""

from .channel import (
    ChannelHMM,
    ChannelParameterError,
    CompositeChannel,
    GilbertElliottParams,
    build_ge_channel,
    compose_channels,
    memoryless_channel,
)
from .coded import (
    CfTransitionSet,
    ProtocolParameterError,
    ProtocolParams,
    RoundOutcome,
    cf_erasure_rate,
    cf_transition_set,
    classify_round,
    mean_delay,
    mgf_delay,
    mgf_transmission,
    throughput,
)
from .msfg import (
    Dual,
    DualMatrix,
    MatrixGain,
    NormalizationError,
    SingularityError,
    parallel,
    pgf_stats,
    self_loop,
    series,
)
from .sim import (
    ChannelTraceSampler,
    DivergenceError,
    SimStats,
    estimate_trace_erasure,
    simulate_cf_arq,
    simulate_uncoded,
)
from .uncoded import (
    uncoded_mean_delay,
    uncoded_mgf_delay,
    uncoded_mgf_transmission,
    uncoded_throughput,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelHMM",
    "ChannelParameterError",
    "ChannelTraceSampler",
    "CfTransitionSet",
    "CompositeChannel",
    "DivergenceError",
    "Dual",
    "DualMatrix",
    "GilbertElliottParams",
    "MatrixGain",
    "NormalizationError",
    "ProtocolParameterError",
    "ProtocolParams",
    "RoundOutcome",
    "SimStats",
    "SingularityError",
    "build_ge_channel",
    "cf_erasure_rate",
    "cf_transition_set",
    "classify_round",
    "compose_channels",
    "estimate_trace_erasure",
    "mean_delay",
    "memoryless_channel",
    "mgf_delay",
    "mgf_transmission",
    "parallel",
    "pgf_stats",
    "self_loop",
    "series",
    "simulate_cf_arq",
    "simulate_uncoded",
    "throughput",
    "uncoded_mean_delay",
    "uncoded_mgf_delay",
    "uncoded_mgf_transmission",
    "uncoded_throughput",
]
