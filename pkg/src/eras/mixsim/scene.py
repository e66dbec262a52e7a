import dataclasses
import typing

import numpy as np
import scipy.signal

import eras.logging as logging

from ..dsp import Waveform
from ..helpers.exceptions import ConfigException, DataException
from .rir import RT60_MAX, RT60_MIN, Rir, RirParams, synth_rir
from .sources import speech_like

logger = logging.getLogger()

N_SOURCES = 2
N_CHANNELS = 2


@dataclasses.dataclass(frozen=True)
class SceneConfig:
    sample_rate: int = 8000
    duration: float = 2.0
    rt60_range: typing.Tuple[float, float] = (0.2, 0.6)
    drr_range_db: typing.Tuple[float, float] = (0.0, 6.0)
    base_delay_range: typing.Tuple[int, int] = (20, 60)
    mic_offset_max: int = 3
    rir_length: int = 4096
    early_window_ms: float = 50.0
    overlap_ratio: float = 1.0
    level_range_db: typing.Tuple[float, float] = (-2.5, 2.5)
    noise_snr_db: typing.Optional[float] = None

    def __post_init__(self):
        low, high = self.rt60_range
        if not RT60_MIN <= low <= high <= RT60_MAX:
            raise ConfigException(f"rt60 range {self.rt60_range} outside [{RT60_MIN}, {RT60_MAX}]")
        if self.sample_rate <= 0 or self.duration <= 0.0:
            raise ConfigException(f"Invalid scene size {self.sample_rate} Hz x {self.duration} s")
        if not 0.0 < self.overlap_ratio <= 1.0:
            raise ConfigException(f"overlap_ratio must lie in (0, 1], got {self.overlap_ratio}")
        if self.base_delay_range[0] < self.mic_offset_max:
            raise ConfigException("base delay must be at least the microphone offset")
        if self.rir_length < self.base_delay_range[1] + self.mic_offset_max + 2:
            raise ConfigException(f"rir_length {self.rir_length} too short for the delays")
        if self.early_window_ms < 0.0:
            raise ConfigException(f"early_window_ms must be non-negative, got {self.early_window_ms}")

    @property
    def length(self) -> int:
        return int(round(self.duration * self.sample_rate))

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @staticmethod
    def from_dict(d: typing.Dict[str, typing.Any]) -> "SceneConfig":
        names = {f.name for f in dataclasses.fields(SceneConfig)}
        unknown = set(d) - names
        if unknown:
            raise ConfigException(f"Unknown scene config keys {sorted(unknown)}")
        return SceneConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclasses.dataclass(frozen=True, eq=False)
class MixtureScene:
    """Ground truth of a reverberant mixture, nested lists indexed ``[source][channel]``."""

    dry: typing.Sequence[Waveform]
    rirs: typing.Sequence[typing.Sequence[Rir]]
    images: typing.Sequence[typing.Sequence[Waveform]]
    direct_path: typing.Sequence[typing.Sequence[Waveform]]
    early: typing.Sequence[typing.Sequence[Waveform]]
    mixtures: typing.Sequence[Waveform]
    seed: int
    noise: typing.Optional[typing.Sequence[Waveform]] = None
    params: typing.Optional["SceneParams"] = None

    def __post_init__(self):
        N, M = len(self.dry), len(self.mixtures)
        for name in ("rirs", "images", "direct_path", "early"):
            grid = getattr(self, name)
            if len(grid) != N or any(len(row) != M for row in grid):
                raise DataException(f"Scene {self.seed}: '{name}' must be {N}x{M}")
        lengths = {w.length for w in self.dry} | {w.length for w in self.mixtures}
        for grid in (self.images, self.direct_path, self.early):
            lengths |= {w.length for row in grid for w in row}
        if len(lengths) != 1:
            raise DataException(f"Scene {self.seed}: components differ in length {sorted(lengths)}")

    @property
    def n_sources(self) -> int:
        return len(self.dry)

    @property
    def n_channels(self) -> int:
        return len(self.mixtures)

    @property
    def length(self) -> int:
        return self.mixtures[0].length

    @property
    def sample_rate(self) -> int:
        return self.mixtures[0].sample_rate

    def images_at(self, m: int) -> typing.List[Waveform]:
        return [self.images[n][m] for n in range(self.n_sources)]

    def direct_at(self, m: int) -> typing.List[Waveform]:
        return [self.direct_path[n][m] for n in range(self.n_sources)]

    def early_at(self, m: int) -> typing.List[Waveform]:
        return [self.early[n][m] for n in range(self.n_sources)]

    def __str__(self):
        return f"MixtureScene(seed={self.seed},sources={self.n_sources},channels={self.n_channels},length={self.length})"


def _convolve(dry: np.ndarray, taps: np.ndarray, length: int) -> np.ndarray:
    return scipy.signal.fftconvolve(dry, taps, mode="full")[:length]


def render_scene(
    dry: typing.Sequence[Waveform],
    rirs: typing.Sequence[typing.Sequence[Rir]],
    early_window_ms: float = 50.0,
    seed: int = 0,
    noise: typing.Optional[typing.Sequence[Waveform]] = None,
    params: typing.Optional["SceneParams"] = None,
) -> MixtureScene:
    """Convolve every dry source with its RIR per channel and sum per channel.

    Shorter sources are zero-padded to the longest one. Convolutions are
    truncated to the source length.
    """
    if not dry:
        raise DataException("render_scene needs at least one dry source")
    rates = {w.sample_rate for w in dry} | {r.sample_rate for row in rirs for r in row}
    if len(rates) != 1:
        raise DataException(f"mismatched sample rates {sorted(rates)}")
    sample_rate = rates.pop()
    length = max(w.length for w in dry)
    sources = [np.pad(w.mono, (0, length - w.length)) for w in dry]
    M = len(rirs[0])

    images, direct, early = [], [], []
    for n, source in enumerate(sources):
        images.append([Waveform(_convolve(source, rirs[n][m].taps, length), sample_rate) for m in range(M)])
        direct.append([Waveform(_convolve(source, rirs[n][m].direct(), length), sample_rate) for m in range(M)])
        early.append(
            [Waveform(_convolve(source, rirs[n][m].early(early_window_ms), length), sample_rate) for m in range(M)]
        )

    mixtures = []
    for m in range(M):
        total = np.sum([images[n][m].mono for n in range(len(sources))], axis=0)
        if noise is not None:
            total = total + noise[m].mono
        mixtures.append(Waveform(total, sample_rate))

    return MixtureScene(
        dry=[Waveform(s, sample_rate) for s in sources],
        rirs=[list(row) for row in rirs],
        images=images,
        direct_path=direct,
        early=early,
        mixtures=mixtures,
        seed=seed,
        noise=noise,
        params=params,
    )


class SceneParams(typing.NamedTuple):
    rt60: typing.List[typing.List[float]]
    drr_db: typing.List[typing.List[float]]
    delays: typing.List[typing.List[int]]
    rir_seeds: typing.List[typing.List[int]]
    levels_db: typing.List[float]


def draw_scene_params(config: SceneConfig, rng: np.random.Generator) -> SceneParams:
    rt60, drr, delays, seeds = [], [], [], []
    for _ in range(N_SOURCES):
        base = int(rng.integers(config.base_delay_range[0], config.base_delay_range[1] + 1))
        offsets = rng.integers(-config.mic_offset_max, config.mic_offset_max + 1, N_CHANNELS)
        offsets[0] = 0
        rt60.append([float(rng.uniform(*config.rt60_range)) for _ in range(N_CHANNELS)])
        drr.append([float(rng.uniform(*config.drr_range_db)) for _ in range(N_CHANNELS)])
        delays.append([base + int(o) for o in offsets])
        seeds.append([int(rng.integers(2**31)) for _ in range(N_CHANNELS)])
    levels = [float(rng.uniform(*config.level_range_db)) for _ in range(N_SOURCES)]
    return SceneParams(rt60, drr, delays, seeds, levels)


def _place(config: SceneConfig, rng: np.random.Generator) -> typing.List[np.ndarray]:
    """Dry sources positioned so that ``overlap_ratio`` of each utterance is double-talk."""
    length = config.length
    utterance = length if config.overlap_ratio >= 1.0 else int(round(length / (2.0 - config.overlap_ratio)))
    sources = []
    for n in range(N_SOURCES):
        signal = speech_like(utterance, config.sample_rate, rng, speaker=n)
        start = 0 if n == 0 else length - utterance
        sources.append(np.pad(signal, (start, length - utterance - start)))
    return sources


def generate_scene(config: SceneConfig, seed: int) -> MixtureScene:
    rng = np.random.default_rng(seed)
    params = draw_scene_params(config, rng)
    rirs = [
        [
            synth_rir(
                RirParams(params.rt60[n][m], params.delays[n][m], config.rir_length, params.drr_db[n][m]),
                params.rir_seeds[n][m],
                config.sample_rate,
            )
            for m in range(N_CHANNELS)
        ]
        for n in range(N_SOURCES)
    ]
    sources = _place(config, rng)
    dry = [Waveform(s * 10.0 ** (level / 20.0), config.sample_rate) for s, level in zip(sources, params.levels_db)]

    noise = None
    if config.noise_snr_db is not None:
        clean = render_scene(dry, rirs, config.early_window_ms, seed)
        noise = []
        for m in range(N_CHANNELS):
            power = np.mean(clean.mixtures[m].mono ** 2) * 10.0 ** (-config.noise_snr_db / 10.0)
            noise.append(Waveform(np.sqrt(power) * rng.standard_normal(config.length), config.sample_rate))

    scene = render_scene(dry, rirs, config.early_window_ms, seed, noise=noise, params=params)
    logger.debug(f"Generated {scene} with rt60 {params.rt60}")
    return scene


def crop_scene(scene: MixtureScene, length: int, offset: int) -> MixtureScene:
    """Every component restricted to ``[offset, offset + length)``."""
    if offset < 0 or length < 1 or offset + length > scene.length:
        raise DataException(f"Cannot crop [{offset}, {offset + length}) from {scene}")

    def cut(w: Waveform) -> Waveform:
        return w.with_samples(w.samples[:, offset : offset + length])

    def cut_grid(grid):
        return [[cut(w) for w in row] for row in grid]

    return MixtureScene(
        dry=[cut(w) for w in scene.dry],
        rirs=scene.rirs,
        images=cut_grid(scene.images),
        direct_path=cut_grid(scene.direct_path),
        early=cut_grid(scene.early),
        mixtures=[cut(w) for w in scene.mixtures],
        seed=scene.seed,
        noise=None if scene.noise is None else [cut(w) for w in scene.noise],
        params=scene.params,
    )


def random_crop(scene: MixtureScene, length: int, rng: np.random.Generator) -> MixtureScene:
    if length >= scene.length:
        return scene
    return crop_scene(scene, length, int(rng.integers(0, scene.length - length + 1)))
