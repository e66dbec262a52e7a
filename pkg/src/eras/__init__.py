from .info import __author__, __author_email__, __date__, __source_url__, __version__

__all__ = [
    "__author__",
    "__author_email__",
    "__date__",
    "__source_url__",
    "__version__",
]
