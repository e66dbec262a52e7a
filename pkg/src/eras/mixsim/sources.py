"""Speech-like dry sources: syllables of a harmonic voiced tone with formant
shaped harmonics, interleaved with band-passed noise bursts and pauses."""
import typing

import numpy as np
import scipy.signal

PITCH_RANGES: typing.Tuple[typing.Tuple[float, float], ...] = ((90.0, 150.0), (180.0, 280.0))
ENVELOPE_FLOOR = 0.02


def _formant_gain(freqs: np.ndarray, formants: typing.Sequence[float], bandwidth: float = 120.0) -> np.ndarray:
    gain = np.zeros_like(freqs)
    for i, formant in enumerate(formants):
        gain += (0.6**i) / (1.0 + ((freqs - formant) / bandwidth) ** 2)
    return gain


def _voiced(n: int, sample_rate: int, rng: np.random.Generator, pitch_range) -> np.ndarray:
    f0 = np.linspace(rng.uniform(*pitch_range), rng.uniform(*pitch_range), n)
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate
    formants = (rng.uniform(300.0, 900.0), rng.uniform(900.0, 2400.0), rng.uniform(2400.0, 3400.0))
    harmonics = np.arange(1, int(0.45 * sample_rate / np.max(f0)) + 1)
    gains = _formant_gain(harmonics * np.mean(f0), formants)
    out = np.sin(np.outer(phase, harmonics) + rng.uniform(0.0, 2.0 * np.pi, harmonics.size)) @ gains
    return out * np.hanning(n)


def _burst(n: int, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    nyquist = sample_rate / 2.0
    low = rng.uniform(0.25, 0.55) * nyquist
    high = min(low * rng.uniform(1.3, 1.8), 0.95 * nyquist)
    sos = scipy.signal.butter(4, [low, high], btype="bandpass", fs=sample_rate, output="sos")
    return scipy.signal.sosfilt(sos, rng.standard_normal(n)) * np.hanning(n)


def speech_like(length: int, sample_rate: int, rng: np.random.Generator, speaker: int = 0) -> np.ndarray:
    """Unit-variance speech-like signal; ``speaker`` selects the pitch range."""
    pitch_range = PITCH_RANGES[speaker % len(PITCH_RANGES)]
    out = np.zeros(length)
    envelope = np.full(length, ENVELOPE_FLOOR)
    position = int(rng.uniform(0.0, 0.1) * sample_rate)
    while position < length:
        if rng.uniform() < 0.35:
            n = min(int(rng.uniform(0.04, 0.1) * sample_rate), length - position)
            if n > 8:
                burst = _burst(n, sample_rate, rng)
                out[position : position + n] += 0.4 * burst / max(np.std(burst), 1e-12)
                envelope[position : position + n] = 1.0
            position += n

        n = min(int(rng.uniform(0.12, 0.3) * sample_rate), length - position)
        if n > 8:
            voiced = _voiced(n, sample_rate, rng, pitch_range)
            out[position : position + n] += voiced / max(np.std(voiced), 1e-12)
            envelope[position : position + n] = 1.0
        position += n + int(rng.uniform(0.03, 0.15) * sample_rate)

    out += ENVELOPE_FLOOR * rng.standard_normal(length) * (envelope <= ENVELOPE_FLOOR)
    return out / np.std(out)
