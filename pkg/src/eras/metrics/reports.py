import csv
import json
import os
import typing

from .evaluation import EvalResult
from .sisnr import DB_CAP
from .tables import ISMS_ROWS, ORACLE_ROWS, Check, IsmsTable, OracleTable

CAP_FOOTER = f"SI-SNR and SDR values are capped at ±{DB_CAP:.0f} dB."

Row = typing.Sequence[typing.Any]


def _cell(value: typing.Any, precision: int) -> str:
    if isinstance(value, float):
        return f"{value:.{precision}f}"
    return str(value)


def format_table(
    title: str,
    header: Row,
    rows: typing.Sequence[Row],
    checks: typing.Sequence[Check] = (),
    footer: typing.Optional[str] = None,
    precision: int = 2,
) -> str:
    """Left-aligned first column, right-aligned value columns, then PASS/FAIL lines."""
    cells = [[_cell(v, precision) for v in row] for row in rows]
    widths = [max([len(str(h))] + [len(r[i]) for r in cells]) for i, h in enumerate(header)]

    def line(values: Row) -> str:
        first = str(values[0]).ljust(widths[0])
        rest = [str(v).rjust(w) for v, w in zip(values[1:], widths[1:])]
        return "  ".join([first, *rest]).rstrip()

    out = [title, line(header), "-" * (sum(widths) + 2 * (len(widths) - 1))]
    out.extend(line(r) for r in cells)
    if checks:
        out.append("")
        out.extend(f"{'PASS' if c.passed else 'FAIL'}  {c.name}" + (f" ({c.detail})" if c.detail else "") for c in checks)
    if footer:
        out.append("")
        out.append(footer)
    return "\n".join(out) + "\n"


def write_csv(path: str, header: Row, rows: typing.Sequence[Row]):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def write_json(path: str, payload: typing.Any):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")


def write_text(path: str, text: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        f.write(text)


def oracle_rows(table: OracleTable) -> typing.Tuple[Row, typing.List[Row]]:
    header = ["Signals mapped to the other channel", *(m.upper() if m == "fcp" else m.capitalize() for m in table.methods)]
    rows = [[row, *(table.values[m][row] for m in table.methods)] for row in ORACLE_ROWS]
    return header, rows


def format_oracle_table(table: OracleTable) -> str:
    header, rows = oracle_rows(table)
    title = f"Mixture reconstruction SI-SNR (dB), mean over {len(table.per_scene)} scene(s) and both directions"
    return format_table(title, header, rows, table.checks, CAP_FOOTER)


def isms_rows(table: IsmsTable) -> typing.Tuple[Row, typing.List[Row]]:
    return ["Signals", "ISMS"], [[row, table.values[row]] for row in ISMS_ROWS]


def format_isms_table(table: IsmsTable) -> str:
    header, rows = isms_rows(table)
    title = f"Oracle ISMS loss value, mean over {len(table.per_scene)} scene(s)"
    return format_table(title, header, rows, table.checks, precision=2)


def eval_rows(results: typing.Sequence[typing.Tuple[str, EvalResult]]) -> typing.Tuple[Row, typing.List[Row]]:
    header = ["Scene", "SI-SNR 1", "SI-SNR 2", "SI-SNRi 1", "SI-SNRi 2", "SDR 1", "SDR 2", "Permutation"]
    rows = [
        [
            name,
            r.si_snr[0],
            r.si_snr[1],
            r.si_snri[0],
            r.si_snri[1],
            r.sdr[0],
            r.sdr[1],
            "".join(str(p + 1) for p in r.permutation),
        ]
        for name, r in results
    ]
    return header, rows


def format_eval_report(results: typing.Sequence[typing.Tuple[str, EvalResult]]) -> str:
    header, rows = eval_rows(results)
    if results:
        si = sum(r.mean_si_snr for _, r in results) / len(results)
        si_i = sum(r.mean_si_snri for _, r in results) / len(results)
        sdr = sum(r.mean_sdr for _, r in results) / len(results)
        rows.append(["Mean", si, "", si_i, "", sdr, "", ""])
    return format_table("FCP-aligned evaluation at the reference channel (dB)", header, rows, footer=CAP_FOOTER)
