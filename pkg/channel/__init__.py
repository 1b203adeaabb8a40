from .model import (
    ChannelModel,
    PhaseVector,
    amplitude_matrix,
    composite_steering,
    real_channel_matrix,
    received_signal,
    steering_matrix_ar,
    steering_vector_rt,
    wrap_phase,
)
from .signal import (
    ChannelError,
    InterleavedSignal,
    SourceSignal,
    as_generator,
    awgn_real,
    complex_awgn,
    deinterleave,
    interleave,
    noise_variance,
    signal_energy,
    snr_linear,
)

__all__ = [
    "ChannelError",
    "ChannelModel",
    "InterleavedSignal",
    "PhaseVector",
    "SourceSignal",
    "amplitude_matrix",
    "as_generator",
    "awgn_real",
    "complex_awgn",
    "composite_steering",
    "deinterleave",
    "interleave",
    "noise_variance",
    "real_channel_matrix",
    "received_signal",
    "signal_energy",
    "snr_linear",
    "steering_matrix_ar",
    "steering_vector_rt",
    "wrap_phase",
]
