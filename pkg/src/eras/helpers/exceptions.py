class ErasException(Exception):
    def __init__(self, *args):
        super().__init__(*args)


class ConfigException(ErasException):
    """Invalid parameters, unknown configuration keys or incompatible checkpoints"""


class DataException(ErasException):
    """Unusable input data: malformed files, missing scene parts, degenerate signals"""


class NumericalException(ErasException):
    """Non-finite values or failed numerical procedures"""


class GradientException(NumericalException):
    """Misuse of a differentiation tape"""
