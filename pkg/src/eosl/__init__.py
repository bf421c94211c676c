"""Energy-optimized semantic loss: scoring and ranking of semantic encoder/decoder candidates."""

from eosl.channel import ChannelModel, average_bit_error, channel_loss, simulate_block_errors
from eosl.core import (
    AttemptRecord,
    EoslScore,
    EoslWeights,
    NoiseSource,
    RetransmitPolicy,
    eosl_term,
    run_transmission,
    score_candidate,
)
from eosl.energy import LinkParams, PowerTrace, communication_energy, integrate_trace, normalize
from eosl.errors import (
    ComputationError,
    DimensionError,
    EoslError,
    IngestionError,
    ValidationError,
)
from eosl.similarity import (
    GrayImage,
    SsimParams,
    cosine_similarity,
    semantic_noise,
    ssim,
    text_to_vector,
)

__version__ = "0.1.0"

__all__ = [
    "AttemptRecord",
    "ChannelModel",
    "ComputationError",
    "DimensionError",
    "EoslError",
    "EoslScore",
    "EoslWeights",
    "GrayImage",
    "IngestionError",
    "LinkParams",
    "NoiseSource",
    "PowerTrace",
    "RetransmitPolicy",
    "SsimParams",
    "ValidationError",
    "average_bit_error",
    "channel_loss",
    "communication_energy",
    "cosine_similarity",
    "eosl_term",
    "integrate_trace",
    "normalize",
    "run_transmission",
    "score_candidate",
    "semantic_noise",
    "simulate_block_errors",
    "ssim",
    "text_to_vector",
]
