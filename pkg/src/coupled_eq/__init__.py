"""Spatially coupled LDPC codes and turbo equalization on ISI channels."""

from ._kernels import COMPILED, backend_name

__version__ = "0.1.0"
__all__ = ["COMPILED", "backend_name", "__version__"]
