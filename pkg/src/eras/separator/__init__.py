from .checkpoint import Checkpoint, CheckpointException, FORMAT_VERSION, load_checkpoint, save_checkpoint
from .config import (
    DataConfig,
    Preset,
    StageConfig,
    TrainConfig,
    apply_preset,
    dataclass_from_dict,
    dump_train_config,
    load_train_config,
)
from .masknet import MaskNet, mixture_features
from .optim import AdamConfig, AdamState, LearningRateSchedule, adam_update, clip_by_global_norm, global_norm
from .sweep import (
    StageRow,
    StageTable,
    SweepCell,
    SweepResult,
    SweepRun,
    format_stage_table,
    format_sweep_table,
    stability_sweep,
    stage_rows,
    stage_table,
    sweep_rows,
)
from .trainer import (
    EpochRecord,
    RunRecord,
    RunStatus,
    SceneExample,
    StepResult,
    Trainer,
    build_dataset,
    classify,
    example_loss,
    prepare_example,
    run_two_stage,
    separate_waveforms,
    train_step,
)

__all__ = [
    "AdamConfig",
    "AdamState",
    "Checkpoint",
    "CheckpointException",
    "DataConfig",
    "EpochRecord",
    "FORMAT_VERSION",
    "LearningRateSchedule",
    "MaskNet",
    "Preset",
    "RunRecord",
    "RunStatus",
    "SceneExample",
    "StageConfig",
    "StageRow",
    "StageTable",
    "StepResult",
    "SweepCell",
    "SweepResult",
    "SweepRun",
    "TrainConfig",
    "Trainer",
    "adam_update",
    "apply_preset",
    "build_dataset",
    "classify",
    "clip_by_global_norm",
    "dataclass_from_dict",
    "dump_train_config",
    "example_loss",
    "format_stage_table",
    "format_sweep_table",
    "global_norm",
    "load_checkpoint",
    "load_train_config",
    "mixture_features",
    "prepare_example",
    "run_two_stage",
    "save_checkpoint",
    "separate_waveforms",
    "stability_sweep",
    "stage_rows",
    "stage_table",
    "sweep_rows",
    "train_step",
]
