from .exceptions import (
    ConfigException,
    DataException,
    ErasException,
    GradientException,
    NumericalException,
)

__all__ = [
    "ConfigException",
    "DataException",
    "ErasException",
    "GradientException",
    "NumericalException",
]
