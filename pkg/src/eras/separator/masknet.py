import dataclasses
import typing

import numpy as np

import eras.logging as logging

from ..autograd import ComplexTensor, Tensor, as_complex, complex_mul, ops
from ..helpers.exceptions import ConfigException

logger = logging.getLogger()

LOG_OFFSET = 1e-3
COMPRESSION = 0.3

Params = typing.Dict[str, np.ndarray]


def mixture_features(bins: np.ndarray) -> np.ndarray:
    """Per-frame ``[log(|X| + 1e-3), compressed Re X, compressed Im X]``, shape [T, 3F].

    Compression keeps the phase and raises the magnitude to the power 0.3.
    """
    magnitude = np.abs(bins)
    gain = np.where(magnitude > 0.0, np.power(np.maximum(magnitude, 1e-300), COMPRESSION - 1.0), 0.0)
    return np.concatenate([np.log(magnitude + LOG_OFFSET), bins.real * gain, bins.imag * gain], axis=1)


@dataclasses.dataclass(frozen=True)
class MaskNet:
    """MLP over mixture frames predicting a complex mask per source and bin.

    The output layer holds ``2 * n_sources * freqs`` values laid out as
    ``[re_0, im_0, re_1, im_1, ...]`` blocks of ``freqs``.
    """

    freqs: int
    n_sources: int = 2
    hidden: typing.Tuple[int, ...] = (128, 128)

    def __post_init__(self):
        if self.freqs < 1 or self.n_sources < 1 or any(h < 1 for h in self.hidden):
            raise ConfigException(f"Invalid MaskNet sizes {self}")

    @property
    def layer_sizes(self) -> typing.List[int]:
        return [3 * self.freqs, *self.hidden, 2 * self.n_sources * self.freqs]

    def parameter_shapes(self) -> typing.Dict[str, typing.Tuple[int, ...]]:
        sizes = self.layer_sizes
        shapes: typing.Dict[str, typing.Tuple[int, ...]] = {}
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            shapes[f"w{i}"] = (fan_in, fan_out)
            shapes[f"b{i}"] = (fan_out,)
        return shapes

    @property
    def parameter_count(self) -> int:
        return int(sum(np.prod(s) for s in self.parameter_shapes().values()))

    def _output_bias(self, value: float) -> np.ndarray:
        bias = np.zeros(2 * self.n_sources * self.freqs)
        for n in range(self.n_sources):
            bias[2 * n * self.freqs : (2 * n + 1) * self.freqs] = value
        return bias

    def initialize(self, seed: int) -> Params:
        """Weights uniform in ``±1/sqrt(fan_in)``, hidden biases zero, masks start at ``1/n_sources``."""
        rng = np.random.default_rng(seed)
        params: Params = {}
        shapes = self.parameter_shapes()
        last = len(self.layer_sizes) - 2
        for name, shape in shapes.items():
            if name.startswith("w"):
                bound = 1.0 / np.sqrt(shape[0])
                params[name] = rng.uniform(-bound, bound, shape)
            else:
                params[name] = np.zeros(shape)
        params[f"b{last}"] = self._output_bias(1.0 / self.n_sources)
        logger.info(f"MaskNet {self.layer_sizes} initialized from seed {seed}, {self.parameter_count} parameters")
        return params

    def identity(self) -> Params:
        """All weights zero and a unit real mask bias: every output equals the mixture."""
        params = {name: np.zeros(shape) for name, shape in self.parameter_shapes().items()}
        params[f"b{len(self.layer_sizes) - 2}"] = self._output_bias(1.0)
        return params

    def check_params(self, params: typing.Mapping[str, typing.Any]):
        for name, shape in self.parameter_shapes().items():
            if name not in params:
                raise ConfigException(f"MaskNet parameter '{name}' is missing")
            value = params[name]
            if tuple(np.shape(value.values if isinstance(value, Tensor) else value)) != shape:
                raise ConfigException(f"MaskNet parameter '{name}' must have shape {shape}")

    def separate(self, params: typing.Mapping[str, typing.Any], mix_spec) -> typing.List[ComplexTensor]:
        """Masked copies of the mixture, one [T, F] complex tensor per source."""
        mixture = as_complex(mix_spec).detach()
        if len(mixture.shape) != 2 or mixture.shape[1] != self.freqs:
            raise ConfigException(
                f"MaskNet configured for {self.freqs} frequencies, got a spectrogram of shape {mixture.shape}"
            )
        T = mixture.shape[0]
        self.check_params(params)

        h: Tensor = Tensor(mixture_features(mixture.numpy()))
        n_layers = len(self.layer_sizes) - 1
        for i in range(n_layers):
            w, b = params[f"w{i}"], params[f"b{i}"]
            h = ops.add(ops.matmul(h, w), ops.broadcast_to(b, (T, self.layer_sizes[i + 1])))
            if i < n_layers - 1:
                h = ops.tanh(h)

        F = self.freqs
        estimates = []
        for n in range(self.n_sources):
            mask = ComplexTensor(h[:, 2 * n * F : (2 * n + 1) * F], h[:, (2 * n + 1) * F : (2 * n + 2) * F])
            estimates.append(complex_mul(mask, mixture))
        return estimates

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {"freqs": self.freqs, "n_sources": self.n_sources, "hidden": list(self.hidden)}

    @staticmethod
    def from_dict(d: typing.Dict[str, typing.Any]) -> "MaskNet":
        return MaskNet(int(d["freqs"]), int(d["n_sources"]), tuple(int(h) for h in d["hidden"]))
