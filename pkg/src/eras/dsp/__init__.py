from .stft import (
    Spectrogram,
    StftConfig,
    StftException,
    framewise_energy,
    istft,
    n_frames,
    stft,
    stft_channels,
)
from .waveform import NormalizedWaveform, Waveform, normalize_by_std, stack_channels

__all__ = [
    "NormalizedWaveform",
    "Spectrogram",
    "StftConfig",
    "StftException",
    "Waveform",
    "framewise_energy",
    "istft",
    "n_frames",
    "normalize_by_std",
    "stack_channels",
    "stft",
    "stft_channels",
]
