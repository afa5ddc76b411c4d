"""Numerical companion for Z/2 harmonic spinor gluing on a model tube."""

from importlib import metadata

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"
