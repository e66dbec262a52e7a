import typing

import numpy as np

import eras.logging as logging

from ..dsp import Spectrogram, StftConfig, Waveform, istft, stft
from ..helpers.exceptions import ConfigException
from ..workers import WorkerPool
from .fcp import FcpConfig, FcpResult, MappingException, fcp_map
from .weights import LambdaWeights, compute_lambda
from .wiener import WienerConfig, wiener_map

logger = logging.getLogger()


class MappingMethod(object):
    """Relative RIR estimators"""

    Fcp = "fcp"
    Wiener = "wiener"

    @staticmethod
    def get_methods() -> typing.List[str]:
        return [MappingMethod.Fcp, MappingMethod.Wiener]


class ChannelMapper:
    """Maps a signal estimated at one channel onto a target channel."""

    @property
    def method(self) -> str:
        raise NotImplementedError("Child class must implement this method")

    def map(self, est: Waveform, target_mix: Waveform) -> Waveform:
        raise NotImplementedError("Child class must implement this method")

    def map_sources(self, ests: typing.Sequence[Waveform], target_mix: Waveform) -> typing.List[Waveform]:
        """Each source gets its own filter; sources are never filtered jointly."""
        return [self.map(est, target_mix) for est in ests]


class FcpMapper(ChannelMapper):
    def __init__(
        self,
        lam: LambdaWeights,
        config: FcpConfig = FcpConfig(),
        stft_config: StftConfig = StftConfig(),
        pool: typing.Optional[WorkerPool] = None,
    ) -> None:
        self.lam = lam
        self.config = config
        self.stft_config = stft_config
        self.pool = pool
        self.last_filters: typing.Optional[np.ndarray] = None

    @property
    def method(self) -> str:
        return MappingMethod.Fcp

    def map_spectrogram(self, est: Spectrogram, target_mix: Spectrogram) -> FcpResult:
        result = fcp_map(est, target_mix, self.lam, self.config, pool=self.pool)
        self.last_filters = result.filters
        return result

    def map(self, est: Waveform, target_mix: Waveform) -> Waveform:
        result = self.map_spectrogram(stft(est, self.stft_config), stft(target_mix, self.stft_config))
        return istft(result.mapped, self.stft_config, length=target_mix.length)


class WienerMapper(ChannelMapper):
    def __init__(self, config: WienerConfig = WienerConfig()) -> None:
        self.config = config
        self.last_filters: typing.Optional[np.ndarray] = None

    @property
    def method(self) -> str:
        return MappingMethod.Wiener

    def map(self, est: Waveform, target_mix: Waveform) -> Waveform:
        result = wiener_map(est, target_mix, self.config)
        self.last_filters = result.filter
        return result.mapped


def create_mapper(
    method: str,
    mixtures: typing.Sequence[Waveform] = (),
    fcp_config: FcpConfig = FcpConfig(),
    wiener_config: WienerConfig = WienerConfig(),
    stft_config: StftConfig = StftConfig(),
    pool: typing.Optional[WorkerPool] = None,
) -> ChannelMapper:
    if method == MappingMethod.Fcp:
        if not mixtures:
            raise MappingException("FCP mapping needs the mixtures to compute λ")
        lam = compute_lambda([stft(m, stft_config) for m in mixtures], fcp_config.lambda_floor_coeff)
        return FcpMapper(lam, fcp_config, stft_config, pool=pool)

    elif method == MappingMethod.Wiener:
        return WienerMapper(wiener_config)

    raise ConfigException(
        f"Invalid mapping method '{method}', factory supports {MappingMethod.get_methods()}"
    )


def map_sources(
    ests: typing.Sequence[Waveform],
    mixtures: typing.Sequence[Waveform],
    target_m: int,
    method: str,
    fcp_config: FcpConfig = FcpConfig(),
    wiener_config: WienerConfig = WienerConfig(),
    stft_config: StftConfig = StftConfig(),
) -> typing.List[Waveform]:
    """Map every estimate onto mixture channel ``target_m``."""
    if not 0 <= target_m < len(mixtures):
        raise MappingException(f"Target channel {target_m} out of range for {len(mixtures)} mixture(s)")
    mapper = create_mapper(method, mixtures, fcp_config, wiener_config, stft_config)
    logger.debug(f"Mapping {len(ests)} source(s) onto channel {target_m} with {mapper.method}")
    return mapper.map_sources(ests, mixtures[target_m])
