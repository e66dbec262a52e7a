from .icc import IccResult, icc_loss
from .isms import MAG_FLOOR, isms_loss, log_magnitude_spread
from .objective import (
    DirectedTerm,
    DirectionLoss,
    LossReport,
    LossWeights,
    channel_name,
    eras_loss,
    mean_report,
)
from .reconstruction import LossException, mixture_norm, ras_loss, signal_loss
from .traces import TRACE_COLUMNS, LossTraceWriter

__all__ = [
    "DirectedTerm",
    "DirectionLoss",
    "IccResult",
    "LossException",
    "LossReport",
    "LossTraceWriter",
    "LossWeights",
    "MAG_FLOOR",
    "TRACE_COLUMNS",
    "channel_name",
    "eras_loss",
    "icc_loss",
    "isms_loss",
    "log_magnitude_spread",
    "mean_report",
    "mixture_norm",
    "ras_loss",
    "signal_loss",
]
