from .evaluation import EvalResult, align, aligned_eval, best_permutation
from .reports import (
    CAP_FOOTER,
    eval_rows,
    format_eval_report,
    format_isms_table,
    format_oracle_table,
    format_table,
    isms_rows,
    oracle_rows,
    write_csv,
    write_json,
    write_text,
)
from .sisnr import DB_CAP, energy_ratio_db, sdr_filtered, si_snr, si_snr_improvement
from .tables import (
    ISMS_ROWS,
    ORACLE_ROWS,
    Check,
    IsmsTable,
    OracleTable,
    frequency_permuted,
    isms_table,
    oracle_table,
    reconstruction_si_snr,
    scene_isms,
)

__all__ = [
    "CAP_FOOTER",
    "Check",
    "DB_CAP",
    "EvalResult",
    "ISMS_ROWS",
    "IsmsTable",
    "ORACLE_ROWS",
    "OracleTable",
    "align",
    "aligned_eval",
    "best_permutation",
    "energy_ratio_db",
    "eval_rows",
    "format_eval_report",
    "format_isms_table",
    "format_oracle_table",
    "format_table",
    "frequency_permuted",
    "isms_rows",
    "isms_table",
    "oracle_rows",
    "oracle_table",
    "reconstruction_si_snr",
    "scene_isms",
    "sdr_filtered",
    "si_snr",
    "si_snr_improvement",
    "write_csv",
    "write_json",
    "write_text",
]
