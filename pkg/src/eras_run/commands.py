import dataclasses
import os
import typing

import eras.logging as logging
from eras.dsp import StftConfig, stft
from eras.helpers.exceptions import ConfigException, DataException
from eras.losses import channel_name
from eras.metrics import (
    aligned_eval,
    eval_rows,
    format_eval_report,
    format_isms_table,
    format_oracle_table,
    isms_rows,
    isms_table,
    oracle_rows,
    oracle_table,
    write_csv,
    write_json,
    write_text,
)
from eras.mixsim import ManifestLoader, MixtureScene, SceneConfig, SceneManifest, generate_scene, save_scene, write_manifest
from eras.relative_rir import FcpConfig, MappingMethod, WienerConfig, compute_lambda, fcp_map, filters_to_json
from eras.separator import (
    MaskNet,
    Trainer,
    TrainConfig,
    apply_preset,
    build_dataset,
    format_stage_table,
    format_sweep_table,
    load_checkpoint,
    prepare_example,
    separate_waveforms,
    stability_sweep,
    stage_rows,
    stage_table,
    sweep_rows,
)
from eras.workers import WorkerPool

from .run_config import RunConfig, write_snapshot

logger = logging.getLogger()


class Command(typing.NamedTuple):
    name: str
    params: typing.Tuple[str, ...]
    run: typing.Callable[[RunConfig], int]


def load_named_scenes(path: str) -> typing.List[typing.Tuple[str, MixtureScene]]:
    loader = ManifestLoader(path)
    manifest = loader.load()
    if not manifest.scenes:
        raise DataException(f"Manifest '{loader.filename}' lists no scenes")
    return [(entry.name, loader.load_scene(entry)) for entry in manifest.scenes]


def _stft_config(params: typing.Dict[str, typing.Any], base: StftConfig = StftConfig()) -> StftConfig:
    changes = {k: params[k] for k in ("window_length", "hop_length") if params.get(k) is not None}
    if "window_length" in changes:
        changes["fft_size"] = max(base.fft_size, changes["window_length"])
    try:
        return dataclasses.replace(base, **changes)
    except TypeError as e:
        raise ConfigException(f"Invalid STFT parameters {changes}. Error '{e}'") from e


def _prepare_output(config: RunConfig):
    try:
        os.makedirs(config.output_dir, exist_ok=True)
    except OSError as e:
        raise DataException(f"Cannot write to output directory '{config.output_dir}'. Error '{e}'") from e
    if not os.access(config.output_dir, os.W_OK):
        raise DataException(f"Output directory '{config.output_dir}' is not writable")
    write_snapshot(config)


# --------- simulate
SIMULATE_PARAMS = ("count", "scene_config")


def simulate(config: RunConfig) -> int:
    count = int(config.params["count"])
    if count < 1:
        raise ConfigException(f"count must be >= 1, got {count}")
    scene_config = SceneConfig.from_dict(config.params["scene_config"])
    _prepare_output(config)

    pool = WorkerPool(config.threads, name="Simulate")
    names = [f"scene-{i:04d}" for i in range(count)]
    scenes = pool.map(lambda i: generate_scene(scene_config, config.seed + i), range(count))
    entries = [save_scene(scene, config.output_dir, name) for name, scene in zip(names, scenes)]
    path = write_manifest(SceneManifest(entries, scene_config.to_dict(), config.seed), config.output_dir)
    print(f"{count} scene(s) written, manifest {path}")
    return 0


# --------- oracle-table
ORACLE_PARAMS = (
    "manifest",
    "methods",
    "k_past",
    "k_future",
    "wiener_taps",
    "window_length",
    "hop_length",
    "per_scene",
    "dump_filters",
)


def _dump_filters(named: typing.Sequence[typing.Tuple[str, MixtureScene]], fcp_config, stft_config, directory: str):
    """FCP filters mapping each mixture to the other channel."""
    os.makedirs(directory, exist_ok=True)
    for name, scene in named:
        specs = [stft(w, stft_config) for w in scene.mixtures]
        lam = compute_lambda(specs, fcp_config.lambda_floor_coeff)
        for m_r in range(len(specs)):
            for m in range(len(specs)):
                if m == m_r:
                    continue
                label = f"{channel_name(m_r)}->{channel_name(m)}"
                result = fcp_map(specs[m_r], specs[m], lam, fcp_config)
                write_text(
                    os.path.join(directory, f"{name}_{channel_name(m_r)}{channel_name(m)}.json"),
                    filters_to_json(result.filters, fcp_config, f"{name} {label}") + "\n",
                )


def oracle(config: RunConfig) -> int:
    p = config.params
    methods = list(p["methods"])
    for method in methods:
        if method not in MappingMethod.get_methods():
            raise ConfigException(f"Invalid method '{method}', expected one of {MappingMethod.get_methods()}")
    fcp_config = FcpConfig(k_past=int(p["k_past"]), k_future=int(p["k_future"]))
    wiener_config = WienerConfig(filter_length=int(p["wiener_taps"]))
    stft_config = _stft_config(p)
    named = load_named_scenes(p["manifest"])
    _prepare_output(config)

    pool = WorkerPool(config.threads, name="Oracle")
    table = oracle_table([s for _, s in named], methods, fcp_config, wiener_config, stft_config, pool)
    text = format_oracle_table(table)
    write_text(config.path("oracle-table.txt"), text)
    write_csv(config.path("oracle-table.csv"), *oracle_rows(table))
    if p["per_scene"]:
        write_json(config.path("oracle-per-scene.json"), [dict(s, scene=n) for (n, _), s in zip(named, table.per_scene)])
    if p["dump_filters"]:
        _dump_filters(named, fcp_config, stft_config, config.path("filters"))
    print(text, end="")
    return 0


# --------- isms-table
ISMS_PARAMS = ("manifest", "channel", "window_length", "hop_length", "per_scene")


def isms(config: RunConfig) -> int:
    p = config.params
    stft_config = _stft_config(p)
    named = load_named_scenes(p["manifest"])
    _prepare_output(config)

    pool = WorkerPool(config.threads, name="Isms")
    table = isms_table([s for _, s in named], config.seed, int(p["channel"]), stft_config, pool)
    text = format_isms_table(table)
    write_text(config.path("isms-table.txt"), text)
    write_csv(config.path("isms-table.csv"), *isms_rows(table))
    if p["per_scene"]:
        write_json(config.path("isms-per-scene.json"), [dict(s, scene=n) for (n, _), s in zip(named, table.per_scene)])
    print(text, end="")
    return 0


# --------- train
TRAIN_PARAMS = ("train_config", "resume")


def _record_dict(record) -> typing.Dict[str, typing.Any]:
    return {
        "status": record.status,
        "best_epoch": record.best_epoch,
        "fcp_calls": record.fcp_calls,
        "epochs": [r._asdict() for r in record.epochs],
    }


def train(config: RunConfig) -> int:
    train_config = TrainConfig.from_dict(config.params["train_config"])
    resume = config.params.get("resume")
    _prepare_output(config)

    pool = WorkerPool(config.threads, name="Data")
    train_scenes, valid_scenes = build_dataset(train_config.data, pool)
    trainer = Trainer(train_config, train_scenes, valid_scenes, config.output_dir, config.threads)
    if resume:
        trainer.load(resume)
    record = trainer.run()
    write_json(config.path("run.json"), _record_dict(record))
    print(
        f"Training {record.status}: {len(record.epochs)} epoch(s), "
        f"validation SI-SNR {record.final_si_snr:.2f} dB, SDR {record.final_sdr:.2f} dB, best epoch {record.best_epoch}"
    )
    return 0


# --------- stability-sweep
SWEEP_PARAMS = ("train_config", "betas", "seeds", "alpha_refs")


def sweep(config: RunConfig) -> int:
    p = config.params
    train_config = TrainConfig.from_dict(p["train_config"])
    betas, seeds, alpha_refs = [float(b) for b in p["betas"]], [int(s) for s in p["seeds"]], [float(a) for a in p["alpha_refs"]]
    if len(seeds) < 2:
        raise ConfigException(f"A stability sweep needs at least two seeds, got {seeds}")
    _prepare_output(config)

    train_scenes, valid_scenes = build_dataset(train_config.data, WorkerPool(config.threads, name="Data"))
    result = stability_sweep(
        betas, seeds, train_scenes, valid_scenes, train_config, alpha_refs, config.path("runs"), config.threads
    )
    text = format_sweep_table(result)
    write_text(config.path("sweep.txt"), text)
    write_csv(config.path("sweep.csv"), *sweep_rows(result))
    write_json(
        config.path("sweep.json"),
        [r._asdict() for c in result.cells for r in c.runs],
    )
    print(text, end="")
    return 0


# --------- stage-table
STAGE_PARAMS = ("train_config", "presets", "seeds")


def stages(config: RunConfig) -> int:
    p = config.params
    train_config = TrainConfig.from_dict(p["train_config"])
    presets = list(p["presets"])
    for preset in presets:
        apply_preset(train_config, preset)
    _prepare_output(config)

    train_scenes, valid_scenes = build_dataset(train_config.data, WorkerPool(config.threads, name="Data"))
    table = stage_table(
        train_scenes, valid_scenes, train_config, [int(s) for s in p["seeds"]], presets, config.path("runs"), config.threads
    )
    text = format_stage_table(table)
    write_text(config.path("stage-table.txt"), text)
    write_csv(config.path("stage-table.csv"), *stage_rows(table))
    write_json(
        config.path("stage-table.json"),
        [{"preset": r.preset, "si_snr": r.si_snr, "sdr": r.sdr, "per_seed": [list(s) for s in r.per_seed]} for r in table.rows],
    )
    print(text, end="")
    return 0


# --------- evaluate
EVALUATE_PARAMS = ("checkpoint", "manifest", "sdr_taps", "window_length", "hop_length", "per_scene")


def evaluate(config: RunConfig) -> int:
    p = config.params
    checkpoint = load_checkpoint(p["checkpoint"])
    meta = checkpoint.metadata
    if "net" not in meta or "config" not in meta:
        raise DataException(f"Checkpoint '{p['checkpoint']}' carries no model description")
    train_config = TrainConfig.from_dict(meta["config"])
    net = MaskNet.from_dict(meta["net"])
    net.check_params(checkpoint.params)
    stft_config = _stft_config(p, train_config.stft)
    named = load_named_scenes(p["manifest"])
    _prepare_output(config)

    sdr_taps = int(p["sdr_taps"])
    fcp_config = train_config.fcp

    def score(item):
        name, scene = item
        example = prepare_example(scene, stft_config, fcp_config, name)
        ests = separate_waveforms(net, checkpoint.params, example, stft_config)
        refs = [row[0] for row in example.images]
        return name, aligned_eval(refs, ests, example.mixtures, fcp_config, stft_config, sdr_taps)

    results = WorkerPool(config.threads, name="Evaluate").map(score, named)
    text = format_eval_report(results)
    write_text(config.path("eval.txt"), text)
    write_csv(config.path("eval.csv"), *eval_rows(results))
    if p["per_scene"]:
        write_json(config.path("eval.json"), [dict(r.to_dict(), scene=n) for n, r in results])
    print(text, end="")
    return 0


COMMANDS: typing.Dict[str, Command] = {
    c.name: c
    for c in (
        Command("simulate", SIMULATE_PARAMS, simulate),
        Command("oracle-table", ORACLE_PARAMS, oracle),
        Command("isms-table", ISMS_PARAMS, isms),
        Command("train", TRAIN_PARAMS, train),
        Command("stability-sweep", SWEEP_PARAMS, sweep),
        Command("stage-table", STAGE_PARAMS, stages),
        Command("evaluate", EVALUATE_PARAMS, evaluate),
    )
}


def allowed_params() -> typing.Dict[str, typing.Sequence[str]]:
    return {name: c.params for name, c in COMMANDS.items()}


def execute(config: RunConfig) -> int:
    command = COMMANDS.get(config.command)
    if command is None:
        raise ConfigException(f"Invalid command '{config.command}', expected one of {sorted(COMMANDS)}")
    logger.info(f"Running '{config.command}' with seed {config.seed} on {config.threads} thread(s)")
    return command.run(config)
