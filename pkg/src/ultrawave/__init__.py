"""Numerical microlocal analysis for ultradistributions: associated functions,
cone semi-norms and wave-front set estimators on sampled signals."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

__all__ = ["__version__", "BACKEND"]
