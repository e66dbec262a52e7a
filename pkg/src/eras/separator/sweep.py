import dataclasses
import os
import typing

import numpy as np

import eras.logging as logging

from ..helpers.exceptions import ConfigException, NumericalException
from ..metrics import Check, format_table
from ..mixsim import MixtureScene
from ..workers import WorkerPool
from .config import Preset, TrainConfig, apply_preset
from .trainer import RunStatus, run_two_stage

logger = logging.getLogger()

STAGE_MARGIN_DB = 0.2


class SweepRun(typing.NamedTuple):
    beta: float
    alpha_ref: float
    seed: int
    status: str
    si_snr: float
    error: typing.Optional[str] = None


@dataclasses.dataclass
class SweepCell:
    beta: float
    alpha_ref: float
    runs: typing.List[SweepRun]

    @property
    def successes(self) -> int:
        return sum(1 for r in self.runs if r.status == RunStatus.Success)

    @property
    def failures(self) -> int:
        return len(self.runs) - self.successes


@dataclasses.dataclass
class SweepResult:
    cells: typing.List[SweepCell]
    seeds: typing.List[int]
    checks: typing.List[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def cell(self, beta: float, alpha_ref: float = 0.0) -> SweepCell:
        for c in self.cells:
            if c.beta == beta and c.alpha_ref == alpha_ref:
                return c
        raise KeyError((beta, alpha_ref))


def sweep_config(base: TrainConfig, beta: float, alpha_ref: float, seed: int) -> TrainConfig:
    """Stage-1 only run lasting exactly the probation epochs."""
    stage1 = dataclasses.replace(base.stage1, epochs=base.probation_epochs, beta=beta, gamma=0.0, alpha_ref=alpha_ref)
    stage2 = dataclasses.replace(base.stage2, enabled=False)
    return base.replace(seed=seed, stage1=stage1, stage2=stage2)


def _run_dir(output_dir: typing.Optional[str], *parts: str) -> typing.Optional[str]:
    return None if output_dir is None else os.path.join(output_dir, *parts)


def stability_sweep(
    betas: typing.Sequence[float],
    seeds: typing.Sequence[int],
    train_scenes: typing.Sequence[MixtureScene],
    valid_scenes: typing.Sequence[MixtureScene],
    base_config: TrainConfig = TrainConfig(),
    alpha_refs: typing.Sequence[float] = (0.0,),
    output_dir: typing.Optional[str] = None,
    threads: int = 1,
) -> SweepResult:
    """Train every (beta, alpha_ref, seed) combination and count successes and failures.

    A run that blows up numerically is a failure, not an error.
    """
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ConfigException(f"A stability sweep needs at least two seeds, got {seeds}")
    if not betas:
        raise ConfigException("A stability sweep needs at least one beta")

    jobs = [(b, a, s) for a in alpha_refs for b in betas for s in seeds]

    def train(job: typing.Tuple[float, float, int]) -> SweepRun:
        beta, alpha_ref, seed = job
        config = sweep_config(base_config, beta, alpha_ref, seed)
        run_dir = _run_dir(output_dir, f"beta-{beta:g}_alpha-{alpha_ref:g}", f"seed-{seed}")
        try:
            record = run_two_stage(config, train_scenes, valid_scenes, run_dir)
        except NumericalException as e:
            logger.warning(f"Run beta={beta} alpha_ref={alpha_ref} seed={seed} diverged: {e}")
            return SweepRun(beta, alpha_ref, seed, RunStatus.Failure, float("nan"), str(e))
        logger.info(f"Run beta={beta} alpha_ref={alpha_ref} seed={seed}: {record.status} ({record.final_si_snr:.2f} dB)")
        return SweepRun(beta, alpha_ref, seed, record.status, record.final_si_snr)

    runs = WorkerPool(threads, name="Sweep").map(train, jobs)
    cells = []
    for alpha_ref in alpha_refs:
        for beta in betas:
            cells.append(SweepCell(beta, alpha_ref, [r for r in runs if r.beta == beta and r.alpha_ref == alpha_ref]))
    return SweepResult(cells, seeds, sweep_checks(cells))


def sweep_checks(cells: typing.Sequence[SweepCell]) -> typing.List[Check]:
    checks = []
    for alpha_ref in sorted({c.alpha_ref for c in cells}):
        row = sorted((c for c in cells if c.alpha_ref == alpha_ref), key=lambda c: c.beta)
        if len(row) < 2:
            continue
        low, high = row[0], row[-1]
        checks.append(
            Check(
                f"failures(beta={high.beta:g}) <= failures(beta={low.beta:g}) at alpha_ref={alpha_ref:g}",
                high.failures <= low.failures,
                f"{high.failures} vs {low.failures}",
            )
        )
    return checks


def sweep_rows(result: SweepResult):
    header = ["alpha_ref", "beta", "Success", "Failure"]
    rows = [[f"{c.alpha_ref:g}", f"{c.beta:g}", c.successes, c.failures] for c in result.cells]
    return header, rows


def format_sweep_table(result: SweepResult) -> str:
    header, rows = sweep_rows(result)
    title = f"Number of training successes / failures among {len(result.seeds)} trial(s)"
    return format_table(title, header, rows, result.checks)


class StageRow(typing.NamedTuple):
    preset: str
    description: str
    si_snr: float
    sdr: float
    per_seed: typing.List[typing.Tuple[int, float, float]]


@dataclasses.dataclass
class StageTable:
    rows: typing.List[StageRow]
    seeds: typing.List[int]
    checks: typing.List[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def row(self, preset: str) -> StageRow:
        for r in self.rows:
            if r.preset == preset:
                return r
        raise KeyError(preset)


def stage_table(
    train_scenes: typing.Sequence[MixtureScene],
    valid_scenes: typing.Sequence[MixtureScene],
    base_config: TrainConfig = TrainConfig(),
    seeds: typing.Sequence[int] = (0, 1, 2),
    presets: typing.Sequence[str] = (Preset.A1, Preset.A2, Preset.A3, Preset.A4),
    output_dir: typing.Optional[str] = None,
    threads: int = 1,
) -> StageTable:
    """Train each fine-tuning preset over the seeds and report the mean final validation scores."""
    seeds = list(seeds)
    if not seeds:
        raise ConfigException("The stage table needs at least one seed")
    descriptions = {p["name"]: p["desc"] for p in Preset.get_presets()}
    jobs = [(p, s) for p in presets for s in seeds]

    def train(job: typing.Tuple[str, int]) -> typing.Tuple[int, float, float]:
        preset, seed = job
        config = apply_preset(base_config.replace(seed=seed), preset)
        record = run_two_stage(config, train_scenes, valid_scenes, _run_dir(output_dir, preset, f"seed-{seed}"))
        return seed, record.final_si_snr, record.final_sdr

    results = WorkerPool(threads, name="StageTable").map(train, jobs)
    rows = []
    for preset in presets:
        per_seed = [r for (p, _), r in zip(jobs, results) if p == preset]
        rows.append(
            StageRow(
                preset,
                descriptions[preset],
                float(np.mean([r[1] for r in per_seed])),
                float(np.mean([r[2] for r in per_seed])),
                per_seed,
            )
        )

    checks = []
    names = [r.preset for r in rows]
    if Preset.A1 in names and Preset.A4 in names:
        a1, a4 = rows[names.index(Preset.A1)], rows[names.index(Preset.A4)]
        checks.append(
            Check(
                f"SI-SNR({Preset.A4}) >= SI-SNR({Preset.A1}) - {STAGE_MARGIN_DB:g} dB",
                a4.si_snr >= a1.si_snr - STAGE_MARGIN_DB,
                f"{a4.si_snr:.2f} vs {a1.si_snr:.2f}",
            )
        )
    return StageTable(rows, seeds, checks)


def stage_rows(table: StageTable):
    header = ["Preset", "Fine-tuning", "SI-SNR", "SDR"]
    return header, [[r.preset, r.description, r.si_snr, r.sdr] for r in table.rows]


def format_stage_table(table: StageTable) -> str:
    header, rows = stage_rows(table)
    title = f"Validation scores (dB) after fine-tuning, mean over {len(table.seeds)} seed(s)"
    return format_table(title, header, rows, table.checks)
