"""Pixel-art tileset analysis and narrative-driven tile scene generation."""
__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
