import numpy as np

from .helpers.exceptions import NumericalException


def check_finite(name: str, values: np.ndarray, exception=NumericalException):
    if not np.all(np.isfinite(values)):
        bad = int(np.size(values) - np.count_nonzero(np.isfinite(values)))
        raise exception(f"{name} contains {bad} non-finite value(s)")
