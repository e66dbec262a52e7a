import csv
import os
import typing

from .objective import LossReport

TRACE_COLUMNS = ("step", "direction", "ras", "isms", "icc", "total")


def _fmt(value: typing.Optional[float]) -> str:
    return "" if value is None else repr(float(value))


class LossTraceWriter:
    """Appends one CSV row per direction and step."""

    def __init__(self, path: str, append: bool = False):
        self.path = path
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        exists = append and os.path.isfile(path) and os.path.getsize(path) > 0
        self._file = open(path, "a" if append else "w", newline="")
        self._writer = csv.writer(self._file)
        if not exists:
            self._writer.writerow(TRACE_COLUMNS)

    def write(self, step: int, report: LossReport):
        for label, d in report.directions.items():
            self._writer.writerow([step, label, _fmt(d.ras), _fmt(d.isms), _fmt(d.icc), _fmt(d.total)])

    def flush(self):
        self._file.flush()

    def close(self):
        if not self._file.closed:
            self._file.close()

    def __enter__(self) -> "LossTraceWriter":
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
