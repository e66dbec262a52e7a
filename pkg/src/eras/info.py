__author__ = "eras-sep developers"
__author_email__ = ""
__source_url__ = ""
__version__ = "0.1.0"
__date__ = "2026-10-16 00:00:00+00:00"

__all__ = [
    "__author__",
    "__author_email__",
    "__date__",
    "__source_url__",
    "__version__",
]
