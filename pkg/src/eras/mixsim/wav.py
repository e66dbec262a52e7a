"""WAV ingestion and output.

Decoding and encoding go through ``soundfile``. Before decoding, the RIFF
chunk layout is checked so that malformed files fail with an error naming the
chunk at fault. PCM16 output quantizes with round-half-away-from-zero:
``q = sign(x) * floor(|x| * 32768 + 0.5)`` clipped to the int16 range.
"""
import os
import struct
import typing

import numpy as np
import soundfile

from ..dsp import Waveform
from ..helpers.exceptions import ConfigException, DataException

PCM16_SCALE = 32768.0

_FORMAT_PCM = 0x0001
_FORMAT_FLOAT = 0x0003
_FORMAT_EXTENSIBLE = 0xFFFE


class WavFormat(object):
    Pcm16 = "pcm16"
    Float32 = "float32"

    @staticmethod
    def get_formats() -> typing.List[str]:
        return [WavFormat.Pcm16, WavFormat.Float32]


_SUBTYPES = {WavFormat.Pcm16: "PCM_16", WavFormat.Float32: "FLOAT"}


class WavFormatException(DataException):
    pass


class WavLayout(typing.NamedTuple):
    format_tag: int
    channels: int
    sample_rate: int
    bits: int
    data_bytes: int


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    scaled = np.sign(samples) * np.floor(np.abs(samples) * PCM16_SCALE + 0.5)
    return np.clip(scaled, -PCM16_SCALE, PCM16_SCALE - 1).astype(np.int16)


def inspect_wav(path: str) -> WavLayout:
    """Walk the RIFF chunks of ``path`` and validate the ``fmt `` and ``data`` chunks."""
    with open(path, "rb") as f:
        blob = f.read()

    if len(blob) < 12 or blob[:4] != b"RIFF":
        raise WavFormatException(f"{path}: missing RIFF chunk header")
    if blob[8:12] != b"WAVE":
        raise WavFormatException(f"{path}: RIFF chunk is not of form WAVE")

    fmt: typing.Optional[WavLayout] = None
    offset = 12
    while offset + 8 <= len(blob):
        chunk_id = blob[offset : offset + 4]
        (size,) = struct.unpack("<I", blob[offset + 4 : offset + 8])
        body = blob[offset + 8 : offset + 8 + size]
        name = chunk_id.decode("ascii", errors="replace")

        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise WavFormatException(f"{path}: 'fmt ' chunk truncated ({len(body)} of 16 bytes)")
            tag, channels, rate, _, _, bits = struct.unpack("<HHIIHH", body[:16])
            if tag == _FORMAT_EXTENSIBLE and len(body) >= 26:
                (tag,) = struct.unpack("<H", body[24:26])
            fmt = WavLayout(tag, channels, rate, bits, 0)
        elif chunk_id == b"data":
            if fmt is None:
                raise WavFormatException(f"{path}: 'data' chunk found before the 'fmt ' chunk")
            if len(body) < size:
                raise WavFormatException(f"{path}: '{name}' chunk truncated, declared {size} bytes, found {len(body)}")
            supported = (fmt.format_tag, fmt.bits) in ((_FORMAT_PCM, 16), (_FORMAT_FLOAT, 32))
            if not supported:
                raise WavFormatException(
                    f"{path}: 'fmt ' chunk declares unsupported codec 0x{fmt.format_tag:04x} "
                    f"with {fmt.bits} bits, expected PCM16 or IEEE float32"
                )
            if not 1 <= fmt.channels <= 2:
                raise WavFormatException(f"{path}: 'fmt ' chunk declares {fmt.channels} channels, expected 1 or 2")
            return fmt._replace(data_bytes=size)
        offset += 8 + size + (size & 1)

    if fmt is None:
        raise WavFormatException(f"{path}: missing 'fmt ' chunk")
    raise WavFormatException(f"{path}: missing 'data' chunk")


def load_wav(path: str) -> Waveform:
    if not os.path.isfile(path):
        raise DataException(f"WAV file '{path}' does not exist")
    layout = inspect_wav(path)
    dtype = "int16" if layout.format_tag == _FORMAT_PCM else "float32"
    try:
        data, sample_rate = soundfile.read(path, dtype=dtype, always_2d=True)
    except RuntimeError as e:
        raise WavFormatException(f"{path}: failed to decode 'data' chunk. Error '{e}'") from e

    samples = data.T.astype(np.float64)
    if layout.format_tag == _FORMAT_PCM:
        samples /= PCM16_SCALE
    return Waveform(samples, sample_rate)


def _clear_peak_timestamp(path: str):
    """libsndfile writes the wall-clock time into the ``PEAK`` chunk of float files; zero it."""
    with open(path, "r+b") as f:
        blob = f.read()
        offset = 12
        while offset + 8 <= len(blob):
            (size,) = struct.unpack("<I", blob[offset + 4 : offset + 8])
            if blob[offset : offset + 4] == b"PEAK" and size >= 8:
                f.seek(offset + 12)
                f.write(b"\x00" * 4)
                return
            offset += 8 + size + (size & 1)


def save_wav(path: str, w: Waveform, format: str = WavFormat.Float32):
    if format not in _SUBTYPES:
        raise ConfigException(f"Unsupported WAV format '{format}', expected one of {WavFormat.get_formats()}")
    if not 1 <= w.channels <= 2:
        raise DataException(f"Cannot write {w.channels} channels to '{path}', expected 1 or 2")

    data = quantize_pcm16(w.samples) if format == WavFormat.Pcm16 else w.samples.astype(np.float32)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    soundfile.write(path, data.T, w.sample_rate, subtype=_SUBTYPES[format], format="WAV")
    if format == WavFormat.Float32:
        _clear_peak_timestamp(path)
