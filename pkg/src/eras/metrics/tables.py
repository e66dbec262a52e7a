"""Oracle experiments on synthetic scenes.

* Filterability: how well the mixture at one channel is reconstructed from
  signals at the other channel mapped through a relative RIR, for four
  choices of those signals (the mixture itself, the source images, the direct
  path plus early reflections, the dry sources).
* ISMS values of degenerate and oracle source sets.
"""
import dataclasses
import typing

import numpy as np

import eras.logging as logging

from ..autograd import ComplexTensor
from ..dsp import StftConfig, Waveform, stft
from ..helpers.exceptions import DataException
from ..losses import MAG_FLOOR, isms_loss
from ..mixsim import MixtureScene
from ..relative_rir import FcpConfig, MappingMethod, WienerConfig, create_mapper
from ..workers import WorkerPool
from .sisnr import si_snr

logger = logging.getLogger()

ORACLE_ROWS = ("Mixture", "Source images", "Direct-path + early reflections", "Dry sources")
ISMS_ROWS = (
    "Mixture, mixture",
    "Mixture, zero signal",
    "Zero signal, zero signal",
    "Clean signals",
    "Freq. permuted clean signals",
)
ISMS_EXPECTED = {ISMS_ROWS[0]: 1.0, ISMS_ROWS[1]: 0.5, ISMS_ROWS[2]: 0.0}
ISMS_EXACT_TOL = 1e-6
MIN_ORACLE_GAP_DB = 3.0
MIN_PERMUTED_FRACTION = 0.95


class Check(typing.NamedTuple):
    name: str
    passed: bool
    detail: str = ""


@dataclasses.dataclass(frozen=True)
class OracleTable:
    methods: typing.Tuple[str, ...]
    values: typing.Dict[str, typing.Dict[str, float]]
    per_scene: typing.List[typing.Dict[str, typing.Any]]
    checks: typing.List[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclasses.dataclass(frozen=True)
class IsmsTable:
    values: typing.Dict[str, float]
    per_scene: typing.List[typing.Dict[str, typing.Any]]
    checks: typing.List[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _require_components(scene: MixtureScene):
    if scene.n_sources != 2 or scene.n_channels != 2:
        raise DataException(f"Scene {scene.seed} must have two sources and two channels")
    for name in ("dry", "images", "early", "mixtures"):
        if not getattr(scene, name):
            raise DataException(f"Scene {scene.seed} is missing oracle component '{name}'")


def oracle_inputs(scene: MixtureScene, m_r: int) -> typing.Dict[str, typing.List[Waveform]]:
    return {
        ORACLE_ROWS[0]: [scene.mixtures[m_r]],
        ORACLE_ROWS[1]: scene.images_at(m_r),
        ORACLE_ROWS[2]: scene.early_at(m_r),
        ORACLE_ROWS[3]: list(scene.dry),
    }


def reconstruction_si_snr(
    scene: MixtureScene,
    method: str,
    m_r: int,
    m: int,
    fcp_config: FcpConfig = FcpConfig(),
    wiener_config: WienerConfig = WienerConfig(),
    stft_config: StftConfig = StftConfig(),
) -> typing.Dict[str, float]:
    """SI-SNR of the mixture at ``m`` rebuilt from each oracle row mapped from ``m_r``."""
    mapper = create_mapper(method, scene.mixtures, fcp_config, wiener_config, stft_config)
    target = scene.mixtures[m]
    values = {}
    for row, signals in oracle_inputs(scene, m_r).items():
        mapped = mapper.map_sources(signals, target)
        values[row] = si_snr(target, np.sum([w.mono for w in mapped], axis=0))
    return values


def _scene_oracle(scene: MixtureScene, methods, fcp_config, wiener_config, stft_config) -> typing.Dict[str, typing.Any]:
    _require_components(scene)
    result: typing.Dict[str, typing.Any] = {"seed": scene.seed}
    for method in methods:
        directions = [
            reconstruction_si_snr(scene, method, m_r, 1 - m_r, fcp_config, wiener_config, stft_config)
            for m_r in (0, 1)
        ]
        result[method] = {row: float(np.mean([d[row] for d in directions])) for row in ORACLE_ROWS}
    return result


def oracle_checks(values: typing.Dict[str, typing.Dict[str, float]]) -> typing.List[Check]:
    checks = []
    for method, column in values.items():
        ordered = [column[row] for row in ORACLE_ROWS]
        increasing = all(a < b for a, b in zip(ordered, ordered[1:]))
        checks.append(Check(f"{method}: strictly increasing down the column", increasing, " < ".join(f"{v:.2f}" for v in ordered)))
        gap = column[ORACLE_ROWS[1]] - column[ORACLE_ROWS[0]]
        checks.append(Check(f"{method}: source images >= mixture + {MIN_ORACLE_GAP_DB:.0f} dB", gap >= MIN_ORACLE_GAP_DB, f"gap {gap:.2f} dB"))
    if MappingMethod.Fcp in values and MappingMethod.Wiener in values:
        fcp, wiener = values[MappingMethod.Fcp][ORACLE_ROWS[0]], values[MappingMethod.Wiener][ORACLE_ROWS[0]]
        checks.append(Check("fcp mixture row < wiener mixture row", fcp < wiener, f"{fcp:.2f} vs {wiener:.2f}"))
    return checks


def oracle_table(
    scenes: typing.Sequence[MixtureScene],
    methods: typing.Sequence[str] = (MappingMethod.Wiener, MappingMethod.Fcp),
    fcp_config: FcpConfig = FcpConfig(),
    wiener_config: WienerConfig = WienerConfig(),
    stft_config: StftConfig = StftConfig(),
    pool: typing.Optional[WorkerPool] = None,
) -> OracleTable:
    """Mean mixture-reconstruction SI-SNR over scenes and both directions."""
    if not scenes:
        raise DataException("oracle_table needs at least one scene")
    for method in methods:
        if method not in MappingMethod.get_methods():
            raise DataException(f"Unknown mapping method '{method}'")
    pool = pool or WorkerPool(1)

    per_scene = pool.map(lambda s: _scene_oracle(s, methods, fcp_config, wiener_config, stft_config), scenes)
    values = {
        method: {row: float(np.mean([s[method][row] for s in per_scene])) for row in ORACLE_ROWS}
        for method in methods
    }
    logger.info(f"Oracle table over {len(scenes)} scene(s): {values}")
    return OracleTable(tuple(methods), values, per_scene, oracle_checks(values))


def frequency_permuted(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> typing.Tuple[np.ndarray, np.ndarray]:
    """Swap the content of ``a`` and ``b`` [T, F] on a random half of the frequency bins."""
    F = a.shape[1]
    swap = rng.permutation(F)[: F // 2]
    a2, b2 = a.copy(), b.copy()
    a2[:, swap], b2[:, swap] = b[:, swap], a[:, swap]
    return a2, b2


def scene_isms(
    scene: MixtureScene,
    seed: int,
    channel: int = 0,
    stft_config: StftConfig = StftConfig(),
    mag_floor: float = MAG_FLOOR,
) -> typing.Dict[str, float]:
    _require_components(scene)
    mix = stft(scene.mixtures[channel], stft_config).bins
    images = [stft(w, stft_config).bins for w in scene.images_at(channel)]
    zero = np.zeros_like(mix)
    rng = np.random.default_rng([seed, scene.seed])
    permuted = frequency_permuted(images[0], images[1], rng)

    rows = {
        ISMS_ROWS[0]: [mix, mix],
        ISMS_ROWS[1]: [mix, zero],
        ISMS_ROWS[2]: [zero, zero],
        ISMS_ROWS[3]: images,
        ISMS_ROWS[4]: list(permuted),
    }
    mixture = ComplexTensor.from_array(mix)
    return {
        row: float(isms_loss([ComplexTensor.from_array(s) for s in specs], mixture, mag_floor))
        for row, specs in rows.items()
    }


def isms_checks(values: typing.Dict[str, float], per_scene: typing.List[typing.Dict[str, typing.Any]]) -> typing.List[Check]:
    checks = []
    for row, expected in ISMS_EXPECTED.items():
        worst = max(abs(s[row] - expected) for s in per_scene)
        checks.append(Check(f"{row} = {expected:.2f}", worst <= ISMS_EXACT_TOL, f"max deviation {worst:.2e}"))
    increased = sum(1 for s in per_scene if s[ISMS_ROWS[4]] > s[ISMS_ROWS[3]])
    fraction = increased / len(per_scene)
    checks.append(
        Check(
            "frequency permutation increases ISMS",
            fraction >= MIN_PERMUTED_FRACTION,
            f"{increased}/{len(per_scene)} scenes",
        )
    )
    clean = values[ISMS_ROWS[3]]
    checks.append(Check("clean signals > 0", clean > 0.0, f"{clean:.4f}"))
    return checks


def isms_table(
    scenes: typing.Sequence[MixtureScene],
    seed: int = 0,
    channel: int = 0,
    stft_config: StftConfig = StftConfig(),
    pool: typing.Optional[WorkerPool] = None,
) -> IsmsTable:
    if not scenes:
        raise DataException("isms_table needs at least one scene")
    pool = pool or WorkerPool(1)
    rows = pool.map(lambda s: scene_isms(s, seed, channel, stft_config), scenes)
    per_scene = [dict(values, seed=s.seed) for s, values in zip(scenes, rows)]
    values = {row: float(np.mean([s[row] for s in per_scene])) for row in ISMS_ROWS}
    logger.info(f"ISMS table over {len(scenes)} scene(s): {values}")
    return IsmsTable(values, per_scene, isms_checks(values, per_scene))
