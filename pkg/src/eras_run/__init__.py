#!/usr/bin/env python3
import argparse
import dataclasses
import typing

import eras.logging as logging
from eras.helpers.exceptions import ConfigException, DataException, NumericalException
from eras.mixsim import SceneConfig
from eras.relative_rir import MappingMethod
from eras.separator import Preset, TrainConfig, apply_preset, load_train_config
from eras.workers import default_threads

from .commands import COMMANDS, allowed_params, execute
from .run_config import RunConfig, default_output_dir, read_snapshot

logger = logging.getLogger()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _run_config(args, command: str, params: typing.Dict[str, typing.Any], seed: int) -> RunConfig:
    return RunConfig(
        command=command,
        seed=seed,
        output_dir=args.output_dir or default_output_dir(),
        threads=args.threads if args.threads is not None else default_threads(),
        log_level=args.log_level,
        params=params,
    )


def _seed(args, default: int = 0) -> int:
    return default if args.seed is None else args.seed


def resolve_simulate(args) -> RunConfig:
    scene = SceneConfig(
        sample_rate=args.sample_rate,
        duration=args.duration,
        rt60_range=(args.rt60_min, args.rt60_max),
        overlap_ratio=args.overlap_ratio,
        noise_snr_db=args.noise_snr_db,
    )
    return _run_config(args, "simulate", {"count": args.count, "scene_config": scene.to_dict()}, _seed(args))


def resolve_oracle(args) -> RunConfig:
    params = {
        "manifest": args.manifest,
        "methods": list(args.methods),
        "k_past": args.k_past,
        "k_future": args.k_future,
        "wiener_taps": args.wiener_taps,
        "window_length": args.window_length,
        "hop_length": args.hop_length,
        "per_scene": args.per_scene,
        "dump_filters": args.dump_filters,
    }
    return _run_config(args, "oracle-table", params, _seed(args))


def resolve_isms(args) -> RunConfig:
    params = {
        "manifest": args.manifest,
        "channel": args.channel,
        "window_length": args.window_length,
        "hop_length": args.hop_length,
        "per_scene": args.per_scene,
    }
    return _run_config(args, "isms-table", params, _seed(args))


def _train_config(args) -> TrainConfig:
    config = load_train_config(args.config)
    data_changes = {
        k: v
        for k, v in (
            ("manifest", args.manifest),
            ("valid_manifest", args.valid_manifest),
            ("train_scenes", args.train_scenes),
            ("valid_scenes", args.valid_scenes),
        )
        if v is not None
    }
    if data_changes:
        config = config.replace(data=dataclasses.replace(config.data, **data_changes))
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    return config


def resolve_train(args) -> RunConfig:
    config = _train_config(args)
    if args.stage1_epochs is not None:
        config = config.replace(stage1=dataclasses.replace(config.stage1, epochs=args.stage1_epochs))
    if args.stage2_epochs is not None:
        config = config.replace(stage2=dataclasses.replace(config.stage2, epochs=args.stage2_epochs))
    if args.no_stage2:
        config = config.replace(stage2=dataclasses.replace(config.stage2, enabled=False))
    if args.preset:
        config = apply_preset(config, args.preset)
    return _run_config(args, "train", {"train_config": config.to_dict(), "resume": args.resume}, config.seed)


def _seed_list(args, base: int) -> typing.List[int]:
    if args.seed_list:
        return list(args.seed_list)
    return list(range(base, base + args.seeds))


def resolve_sweep(args) -> RunConfig:
    config = _train_config(args)
    seeds = _seed_list(args, config.seed)
    if len(seeds) < 2:
        raise ConfigException(f"A stability sweep needs at least two seeds, got {seeds}")
    params = {
        "train_config": config.to_dict(),
        "betas": list(args.betas),
        "seeds": seeds,
        "alpha_refs": list(args.alpha_refs),
    }
    return _run_config(args, "stability-sweep", params, config.seed)


def resolve_stages(args) -> RunConfig:
    config = _train_config(args)
    params = {"train_config": config.to_dict(), "presets": list(args.presets), "seeds": _seed_list(args, config.seed)}
    return _run_config(args, "stage-table", params, config.seed)


def resolve_evaluate(args) -> RunConfig:
    params = {
        "checkpoint": args.checkpoint,
        "manifest": args.manifest,
        "sdr_taps": args.sdr_taps,
        "window_length": args.window_length,
        "hop_length": args.hop_length,
        "per_scene": args.per_scene,
    }
    return _run_config(args, "evaluate", params, _seed(args))


def resolve_replay(args) -> RunConfig:
    config = read_snapshot(args.snapshot, allowed_params())
    if args.output_dir:
        config = config.with_output_dir(args.output_dir)
    if args.threads is not None:
        config = dataclasses.replace(config, threads=args.threads)
    return config


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=None, help="global seed (default: 0 or the training config seed)")
    parser.add_argument(
        "--output-dir",
        dest="output_dir",
        default=None,
        help="output directory (default: $ERAS_OUTPUT_DIR or ./out)",
    )
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: available cores)")
    parser.add_argument("--log-level", dest="log_level", default=None, help="root log level, eg: DEBUG")
    parser.add_argument("--logging-config", dest="logging_config", help="yml config file for logging")
    return parser


def _add_stft_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--window-length", dest="window_length", type=int, default=None)
    parser.add_argument("--hop-length", dest="hop_length", type=int, default=None)


def _add_train_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="training config yml (default: the packaged train-default.yml)")
    parser.add_argument("--manifest", default=None, help="training scene manifest (default: generate scenes)")
    parser.add_argument("--valid-manifest", dest="valid_manifest", default=None)
    parser.add_argument("--train-scenes", dest="train_scenes", type=int, default=None)
    parser.add_argument("--valid-scenes", dest="valid_scenes", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="eras",
        description="Unsupervised two-channel speech separation trained with reverberation as supervision.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate synthetic two-channel two-speaker scenes")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--rt60-min", dest="rt60_min", type=float, default=0.2)
    p.add_argument("--rt60-max", dest="rt60_max", type=float, default=0.6)
    p.add_argument("--duration", type=float, default=2.0, help="seconds per scene")
    p.add_argument("--sample-rate", dest="sample_rate", type=int, default=8000)
    p.add_argument("--overlap-ratio", dest="overlap_ratio", type=float, default=1.0)
    p.add_argument("--noise-snr-db", dest="noise_snr_db", type=float, default=None)
    p.set_defaults(resolve=resolve_simulate)

    p = sub.add_parser("oracle-table", parents=[common], help="mixture reconstruction from oracle signals")
    p.add_argument("--manifest", required=True)
    p.add_argument("--methods", nargs="+", default=[MappingMethod.Wiener, MappingMethod.Fcp], choices=MappingMethod.get_methods())
    p.add_argument("--k-past", dest="k_past", type=int, default=19)
    p.add_argument("--k-future", dest="k_future", type=int, default=1)
    p.add_argument("--wiener-taps", dest="wiener_taps", type=int, default=512)
    p.add_argument("--per-scene", dest="per_scene", action="store_true")
    p.add_argument("--dump-filters", dest="dump_filters", action="store_true", help="write the FCP filters as JSON")
    _add_stft_flags(p)
    p.set_defaults(resolve=resolve_oracle)

    p = sub.add_parser("isms-table", parents=[common], help="ISMS loss on oracle and degenerate signals")
    p.add_argument("--manifest", required=True)
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--per-scene", dest="per_scene", action="store_true")
    _add_stft_flags(p)
    p.set_defaults(resolve=resolve_isms)

    p = sub.add_parser("train", parents=[common], help="two-stage training")
    _add_train_flags(p)
    p.add_argument("--preset", choices=[x["name"] for x in Preset.get_presets()], default=None)
    p.add_argument("--stage1-epochs", dest="stage1_epochs", type=int, default=None)
    p.add_argument("--stage2-epochs", dest="stage2_epochs", type=int, default=None)
    p.add_argument("--no-stage2", dest="no_stage2", action="store_true")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.set_defaults(resolve=resolve_train)

    p = sub.add_parser("stability-sweep", parents=[common], help="success / failure counts over seeds")
    _add_train_flags(p)
    p.add_argument("--betas", nargs="+", type=float, default=[0.0, 0.3])
    p.add_argument("--alpha-refs", dest="alpha_refs", nargs="+", type=float, default=[0.0])
    p.add_argument("--seeds", type=int, default=5, help="number of consecutive seeds from --seed")
    p.add_argument("--seed-list", dest="seed_list", nargs="+", type=int, default=None)
    p.set_defaults(resolve=resolve_sweep)

    p = sub.add_parser("stage-table", parents=[common], help="fine-tuning presets over seeds")
    _add_train_flags(p)
    p.add_argument("--presets", nargs="+", default=[x["name"] for x in Preset.get_presets()])
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--seed-list", dest="seed_list", nargs="+", type=int, default=None)
    p.set_defaults(resolve=resolve_stages)

    p = sub.add_parser("evaluate", parents=[common], help="FCP-aligned SI-SNR / SDR of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--sdr-taps", dest="sdr_taps", type=int, default=512)
    p.add_argument("--per-scene", dest="per_scene", action="store_true")
    _add_stft_flags(p)
    p.set_defaults(resolve=resolve_evaluate)

    p = sub.add_parser("replay", parents=[common], help="re-run a command from its resolved-config.yml")
    p.add_argument("snapshot", help="resolved-config.yml or the directory holding it")
    p.set_defaults(resolve=resolve_replay)
    return parser


def _configure_logging(args):
    if args.logging_config:
        logging.load_config(args.logging_config)
    else:
        logging.load_config_console()
    logging.set_level(args.log_level)


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _configure_logging(args)
    except ValueError as e:
        print(f"Invalid logging configuration: {e}")
        return EXIT_CONFIG
    try:
        config = args.resolve(args)
        if config.command != args.command:
            logging.set_level(args.log_level or config.log_level)
        return execute(config)
    except ConfigException as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except DataException as e:
        logger.error(f"Data error: {e}")
        return EXIT_DATA
    except NumericalException as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return EXIT_FAILURE


__all__ = ["COMMANDS", "build_parser", "main"]
