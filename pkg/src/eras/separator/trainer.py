import csv
import dataclasses
import os
import typing

import numpy as np

import eras.logging as logging

from ..autograd import ComplexTensor, Tape
from ..dsp import StftConfig, Waveform, istft, normalize_by_std, stack_channels, stft
from ..helpers.exceptions import ConfigException, NumericalException
from ..losses import DirectedTerm, LossReport, LossTraceWriter, LossWeights, eras_loss, mean_report
from ..metrics import aligned_eval
from ..mixsim import MixtureScene, SceneConfig, generate_scene, load_scenes, random_crop
from ..relative_rir import FcpConfig, LambdaWeights, compute_lambda, fcp_map_tensor
from ..workers import WorkerPool
from .checkpoint import load_checkpoint, save_checkpoint
from .config import DataConfig, StageConfig, TrainConfig
from .masknet import MaskNet
from .optim import AdamConfig, AdamState, LearningRateSchedule, adam_update, clip_by_global_norm

logger = logging.getLogger()

VALID_SEED_OFFSET = 100000
REFERENCE_CHANNEL = 0
EPOCH_COLUMNS = (
    "epoch",
    "stage",
    "lr",
    "train_loss",
    "train_ras",
    "train_isms",
    "train_icc",
    "valid_loss",
    "valid_si_snr",
    "valid_sdr",
)


class RunStatus(object):
    Success = "success"
    Failure = "failure"


class SceneExample(typing.NamedTuple):
    """A scene normalized by the standard deviation of its mixtures, ready for training."""

    name: str
    mixtures: typing.List[Waveform]
    specs: typing.List[np.ndarray]
    lam: LambdaWeights
    images: typing.List[typing.List[Waveform]]
    scale: float


class ExampleLoss(typing.NamedTuple):
    report: LossReport
    fcp_calls: int


class StepResult(typing.NamedTuple):
    params: typing.Dict[str, np.ndarray]
    opt_state: AdamState
    report: LossReport
    fcp_calls: int
    grad_norm: float


class EpochRecord(typing.NamedTuple):
    epoch: int
    stage: int
    lr: float
    train_loss: float
    train_components: typing.Dict[str, float]
    valid_loss: float
    valid_si_snr: float
    valid_sdr: float


@dataclasses.dataclass
class RunRecord:
    epochs: typing.List[EpochRecord]
    status: str
    best_epoch: typing.Optional[int]
    fcp_calls: int
    config: typing.Dict[str, typing.Any]

    @property
    def final_si_snr(self) -> float:
        return self.epochs[-1].valid_si_snr if self.epochs else float("nan")

    @property
    def final_sdr(self) -> float:
        return self.epochs[-1].valid_sdr if self.epochs else float("nan")


def classify(epochs: typing.Sequence[EpochRecord], probation_epochs: int, threshold_db: float) -> str:
    """Failure iff the validation SI-SNR after the probation epochs is below the threshold."""
    if not epochs:
        return RunStatus.Failure
    record = epochs[min(probation_epochs, len(epochs)) - 1]
    return RunStatus.Success if record.valid_si_snr >= threshold_db else RunStatus.Failure


def prepare_example(scene: MixtureScene, stft_config: StftConfig, fcp_config: FcpConfig, name: str = "") -> SceneExample:
    normalized, scale = normalize_by_std(stack_channels(scene.mixtures))
    mixtures = [normalized.channel(m) for m in range(normalized.channels)]
    specs = [stft(w, stft_config) for w in mixtures]
    lam = compute_lambda(specs, fcp_config.lambda_floor_coeff)
    images = [[w.with_samples(w.samples / scale) for w in row] for row in scene.images]
    return SceneExample(name or f"scene-{scene.seed}", mixtures, [s.bins for s in specs], lam, images, scale)


def example_loss(
    net: MaskNet,
    params: typing.Mapping[str, typing.Any],
    example: SceneExample,
    weights: LossWeights,
    fcp_config: FcpConfig,
) -> ExampleLoss:
    """Separate both channels, map across (and, when needed, onto themselves) and evaluate the objective.

    Self mappings only serve as ICC pseudo targets unless ``alpha_ref`` is set,
    so without it they are computed from detached separations.
    """
    mixtures = [ComplexTensor.from_array(x) for x in example.specs]
    channels = len(mixtures)
    separated = [net.separate(params, x) for x in mixtures]

    calls = 0
    cross, selfs = {}, {}
    for c in range(channels):
        other = (c + 1) % channels
        cross[c] = [fcp_map_tensor(s, mixtures[other], example.lam, fcp_config) for s in separated[c]]
        calls += len(separated[c])
        if weights.uses_self_mapping:
            sources = separated[c] if weights.alpha_ref > 0.0 else [s.detach() for s in separated[c]]
            selfs[c] = [fcp_map_tensor(s, mixtures[c], example.lam, fcp_config) for s in sources]
            calls += len(sources)

    terms = []
    for c in range(channels):
        other = (c + 1) % channels
        terms.append(
            DirectedTerm(
                ref_channel=c,
                target_channel=other,
                target_mixture=mixtures[other],
                input_mixture=mixtures[c],
                cross_mapped=cross[c],
                icc_self_mapped=selfs.get(other) if weights.gamma > 0.0 else None,
                ref_mapped=selfs.get(c) if weights.alpha_ref > 0.0 else None,
            )
        )
    report = eras_loss(terms, weights)
    check_report(report, example.name)
    return ExampleLoss(report, calls)


def check_report(report: LossReport, name: str = ""):
    for component, value in report.components.items():
        if not np.isfinite(value):
            raise NumericalException(f"Non-finite loss component '{component}' ({value}) on {name}")
    if not np.isfinite(report.total):
        raise NumericalException(f"Non-finite total loss ({report.total}) on {name}")


def example_gradients(
    net: MaskNet,
    params: typing.Dict[str, np.ndarray],
    example: SceneExample,
    weights: LossWeights,
    fcp_config: FcpConfig,
) -> typing.Tuple[ExampleLoss, typing.Dict[str, np.ndarray]]:
    names = sorted(params)
    with Tape() as tape:
        watched = {k: tape.watch(params[k]) for k in names}
        result = example_loss(net, watched, example, weights, fcp_config)
    objective = result.report.objective
    if not objective.is_tracked_by(tape):
        return result, {k: np.zeros_like(params[k]) for k in names}
    grads = tape.gradient(objective, [watched[k] for k in names])
    return result, dict(zip(names, grads))


def train_step(
    net: MaskNet,
    params: typing.Dict[str, np.ndarray],
    batch: typing.Sequence[SceneExample],
    weights: LossWeights,
    opt_state: AdamState,
    lr: float,
    fcp_config: FcpConfig = FcpConfig(),
    adam_config: AdamConfig = AdamConfig(),
    pool: typing.Optional[WorkerPool] = None,
) -> StepResult:
    """One Adam update from the batch-mean gradient, clipped to the configured global L2 norm."""
    pool = pool or WorkerPool(1)
    results = pool.map(lambda ex: example_gradients(net, params, ex, weights, fcp_config), batch)

    grads = {k: np.zeros_like(p) for k, p in params.items()}
    for _, example_grads in results:
        for k in grads:
            grads[k] = grads[k] + example_grads[k]
    grads = {k: g / len(batch) for k, g in grads.items()}
    for k, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericalException(f"Non-finite gradient for parameter '{k}'")

    clipped, norm = clip_by_global_norm(grads, adam_config.grad_clip_l2)
    new_params, new_state = adam_update(params, clipped, opt_state, lr, adam_config)
    report = mean_report([r.report for r, _ in results])
    return StepResult(new_params, new_state, report, sum(r.fcp_calls for r, _ in results), norm)


def separate_waveforms(net: MaskNet, params, example: SceneExample, stft_config: StftConfig, channel: int = REFERENCE_CHANNEL) -> typing.List[Waveform]:
    spec = stft(example.mixtures[channel], stft_config)
    estimates = net.separate(params, ComplexTensor.from_array(spec.bins))
    return [istft(spec.with_bins(e.numpy()), stft_config, length=spec.original_length) for e in estimates]


def build_dataset(data: DataConfig, pool: typing.Optional[WorkerPool] = None) -> typing.Tuple[typing.List[MixtureScene], typing.List[MixtureScene]]:
    """Scenes from the configured manifests, otherwise freshly generated from the data seed."""
    pool = pool or WorkerPool(1)
    if data.manifest:
        train = load_scenes(data.manifest)
        valid = load_scenes(data.valid_manifest) if data.valid_manifest else train[-data.valid_scenes :]
        if not data.valid_manifest:
            train = train[: -data.valid_scenes] or train
        return train, valid

    scene_config: SceneConfig = data.scene
    train = pool.map(lambda i: generate_scene(scene_config, data.seed + i), range(data.train_scenes))
    valid = pool.map(
        lambda i: generate_scene(scene_config, data.seed + VALID_SEED_OFFSET + i), range(data.valid_scenes)
    )
    logger.info(f"Generated {len(train)} training and {len(valid)} validation scene(s)")
    return train, valid


class Trainer:
    """Two-stage training loop with validation, checkpoints and epoch logs.

    Stage 1 trains with the first stage weights. At the switch epoch the
    parameters and Adam moments carry over unchanged, the loss weights change
    and the learning rate warms up again from zero.
    """

    def __init__(
        self,
        config: TrainConfig,
        train_scenes: typing.Sequence[MixtureScene],
        valid_scenes: typing.Sequence[MixtureScene],
        output_dir: typing.Optional[str] = None,
        threads: int = 1,
    ) -> None:
        self.config = config
        self.output_dir = output_dir
        self.pool = WorkerPool(threads, name="Trainer")
        self.net = MaskNet(config.stft.n_freqs, 2, tuple(config.hidden))
        self.adam = AdamConfig(grad_clip_l2=config.grad_clip_l2)

        self.train_scenes = list(train_scenes)
        self._train_examples = None
        if config.data.segment_seconds is None:
            self._train_examples = self.pool.map(self._prepare, self.train_scenes)
        self.valid_examples = self.pool.map(self._prepare, list(valid_scenes))

        self.params = self.net.initialize(config.seed)
        self.opt_state = AdamState.zeros(self.params)
        self.schedule = LearningRateSchedule(config.lr, config.lr_halving_patience, config.stage1.warmup_steps)
        self.epoch = 0
        self.stage = 1
        self.step = 0
        self.fcp_calls = 0
        self.records: typing.List[EpochRecord] = []
        self.best_valid_loss: typing.Optional[float] = None
        self.best_epoch: typing.Optional[int] = None
        self._traces: typing.Optional[LossTraceWriter] = None

    def _prepare(self, scene: MixtureScene) -> SceneExample:
        return prepare_example(scene, self.config.stft, self.config.fcp)

    def _path(self, name: str) -> typing.Optional[str]:
        return None if self.output_dir is None else os.path.join(self.output_dir, name)

    @property
    def stage_config(self) -> StageConfig:
        return self.config.stage1 if self.stage == 1 else self.config.stage2

    @property
    def weights(self) -> LossWeights:
        return self.stage_config.weights()

    def batches(self, epoch: int) -> typing.List[typing.List[SceneExample]]:
        rng = np.random.default_rng([self.config.seed, epoch])
        if self._train_examples is not None:
            examples = self._train_examples
        else:
            length = int(round(self.config.data.segment_seconds * self.config.data.scene.sample_rate))
            examples = [self._prepare(random_crop(s, length, rng)) for s in self.train_scenes]
        order = rng.permutation(len(examples))
        size = self.config.batch_size
        return [[examples[i] for i in order[j : j + size]] for j in range(0, len(order), size)]

    def validate(self) -> typing.Tuple[float, float, float]:
        weights, net, params = self.weights, self.net, self.params
        stft_config, fcp_config = self.config.stft, self.config.fcp

        def evaluate(example: SceneExample):
            loss = example_loss(net, params, example, weights, fcp_config).report.total
            ests = separate_waveforms(net, params, example, stft_config)
            refs = [row[REFERENCE_CHANNEL] for row in example.images]
            result = aligned_eval(refs, ests, example.mixtures, fcp_config, stft_config, reference_channel=REFERENCE_CHANNEL)
            return loss, result.mean_si_snr, result.mean_sdr

        rows = self.pool.map(evaluate, self.valid_examples)
        values = np.mean(np.array(rows), axis=0)
        return float(values[0]), float(values[1]), float(values[2])

    def switch_stage(self):
        path = self._path("stage1.npz")
        if path:
            self.save(path)
        self.stage = 2
        self.schedule.restart_warmup(self.config.stage2.warmup_steps)
        self.best_valid_loss = None
        logger.info(f"Switching to stage 2 at epoch {self.epoch} with weights {self.weights}")

    def run_epoch(self) -> EpochRecord:
        epoch = self.epoch + 1
        weights = self.weights
        reports, lr = [], self.schedule.lr()
        for batch in self.batches(epoch):
            lr = self.schedule.step()
            result = train_step(
                self.net, self.params, batch, weights, self.opt_state, lr, self.config.fcp, self.adam, self.pool
            )
            self.params, self.opt_state = result.params, result.opt_state
            self.step += 1
            self.fcp_calls += result.fcp_calls
            reports.append(result.report)
            if self._traces is not None:
                self._traces.write(self.step, result.report)
            logger.debug(f"step {self.step} lr {lr:.3e} loss {result.report.total:.5f} |g| {result.grad_norm:.3f}")

        train = mean_report(reports)
        valid_loss, valid_si_snr, valid_sdr = self.validate()
        self.schedule.end_epoch(valid_loss)
        summary = {
            "ras": sum(d.ras for d in train.directions.values()),
            "isms": sum(d.isms for d in train.directions.values()),
            "icc": sum(d.icc or 0.0 for d in train.directions.values()),
        }
        record = EpochRecord(epoch, self.stage, lr, train.total, summary, valid_loss, valid_si_snr, valid_sdr)
        self.records.append(record)
        self.epoch = epoch

        improved = self.best_valid_loss is None or valid_loss < self.best_valid_loss
        if improved:
            self.best_valid_loss, self.best_epoch = valid_loss, epoch
        if self.output_dir is not None:
            self.save(self._path("latest.npz"))
            if improved:
                self.save(self._path("best.npz"))
            self._append_epoch_row(record)
        logger.info(
            f"Epoch {epoch} stage {self.stage}: train {train.total:.4f} valid {valid_loss:.4f} "
            f"SI-SNR {valid_si_snr:.2f} dB SDR {valid_sdr:.2f} dB"
        )
        return record

    def _append_epoch_row(self, record: EpochRecord):
        path = self._path("epochs.csv")
        exists = os.path.isfile(path) and os.path.getsize(path) > 0
        with open(path, "a", newline="") as f:
            writer = csv.writer(f)
            if not exists:
                writer.writerow(EPOCH_COLUMNS)
            writer.writerow(
                [
                    record.epoch,
                    record.stage,
                    repr(record.lr),
                    repr(record.train_loss),
                    repr(record.train_components["ras"]),
                    repr(record.train_components["isms"]),
                    repr(record.train_components["icc"]),
                    repr(record.valid_loss),
                    repr(record.valid_si_snr),
                    repr(record.valid_sdr),
                ]
            )

    def run(self) -> RunRecord:
        total = self.config.total_epochs
        if self.output_dir is not None:
            os.makedirs(self.output_dir, exist_ok=True)
            self._traces = LossTraceWriter(self._path("loss-trace.csv"), append=self.step > 0)
        try:
            while self.epoch < total:
                if self.stage == 1 and self.config.stage2.enabled and self.epoch >= self.config.stage1.epochs:
                    self.switch_stage()
                self.run_epoch()
        finally:
            if self._traces is not None:
                self._traces.close()
                self._traces = None
        return self.record()

    def record(self) -> RunRecord:
        status = classify(self.records, self.config.probation_epochs, self.config.success_threshold_db)
        return RunRecord(list(self.records), status, self.best_epoch, self.fcp_calls, self.config.to_dict())

    def metadata(self) -> typing.Dict[str, typing.Any]:
        return {
            "epoch": self.epoch,
            "stage": self.stage,
            "step": self.step,
            "fcp_calls": self.fcp_calls,
            "schedule": self.schedule.to_dict(),
            "best_valid_loss": self.best_valid_loss,
            "best_epoch": self.best_epoch,
            "records": [dict(r._asdict()) for r in self.records],
            "net": self.net.to_dict(),
            "config": self.config.to_dict(),
        }

    def save(self, path: str):
        save_checkpoint(path, self.params, self.opt_state, self.metadata())

    def load(self, path: str):
        """Restore the full training state written by :meth:`save`."""
        checkpoint = load_checkpoint(path)
        meta = checkpoint.metadata
        net = MaskNet.from_dict(meta["net"])
        if net != self.net:
            raise ConfigException(f"Checkpoint model {net} does not match the configured {self.net}")
        self.net.check_params(checkpoint.params)
        self.params = {k: np.array(v) for k, v in checkpoint.params.items()}
        self.opt_state = checkpoint.opt_state
        self.schedule = LearningRateSchedule.from_dict(meta["schedule"])
        self.epoch, self.stage, self.step = int(meta["epoch"]), int(meta["stage"]), int(meta["step"])
        self.fcp_calls = int(meta["fcp_calls"])
        self.best_valid_loss, self.best_epoch = meta["best_valid_loss"], meta["best_epoch"]
        self.records = [EpochRecord(**r) for r in meta["records"]]
        logger.info(f"Resumed from {path} at epoch {self.epoch}, stage {self.stage}")


def run_two_stage(
    config: TrainConfig,
    train_scenes: typing.Sequence[MixtureScene],
    valid_scenes: typing.Sequence[MixtureScene],
    output_dir: typing.Optional[str] = None,
    threads: int = 1,
) -> RunRecord:
    record = Trainer(config, train_scenes, valid_scenes, output_dir, threads).run()
    logger.info(f"Run finished with status {record.status}, final SI-SNR {record.final_si_snr:.2f} dB")
    return record
