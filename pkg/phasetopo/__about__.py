"""Get the metadata."""

__version__: str = "0.1.0"
__author__: str = "Antoine Collet"
__name__: str = "phasetopo"
