"""Sequential Monte Carlo and exact oracles for agent-based epidemic models."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
