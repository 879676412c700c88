"""Numerical toolkit for cloning and replicating quantum channels."""

__version__ = "0.1.0"

from . import bounds, channels, linalg, metrics, protocols  # noqa: F401
