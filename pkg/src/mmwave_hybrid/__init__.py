"""Spatially sparse hybrid precoding and combining for mmWave MIMO."""

from .arrays import ArrayGeometry, ArrayKind, Sector, array_response, element_gain
from .channel import ChannelParams, ChannelRealization, response_dictionary, sample_channel
from .combining import (HybridCombiner, SignalModel, design_link, mmse_combiner, mse,
                        rx_covariance, sparse_combiner_omp)
from .feedback import (AngleCodebook, SubspaceCodebook, feedback_roundtrip, quantize_bb,
                       quantized_dictionary, train_bb_codebook)
from .metrics import RatePoint, spectral_efficiency, sweep
from .precoding import (HybridPrecoder, beam_pattern, beam_steering, mutual_information,
                        optimal_precoder, sparse_precoder_omp, waterfilling)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry", "ArrayKind", "Sector", "array_response", "element_gain",
    "ChannelParams", "ChannelRealization", "response_dictionary", "sample_channel",
    "HybridCombiner", "SignalModel", "design_link", "mmse_combiner", "mse", "rx_covariance",
    "sparse_combiner_omp",
    "AngleCodebook", "SubspaceCodebook", "feedback_roundtrip", "quantize_bb",
    "quantized_dictionary", "train_bb_codebook",
    "RatePoint", "spectral_efficiency", "sweep",
    "HybridPrecoder", "beam_pattern", "beam_steering", "mutual_information",
    "optimal_precoder", "sparse_precoder_omp", "waterfilling",
]
