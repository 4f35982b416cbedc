"""Hybrid walking: a CPG-ZMP walk engine with PPO and symmetry losses."""
from hybridwalk.kernels import IMPLEMENTATION

__version__ = "0.1.0"
__all__ = ["IMPLEMENTATION", "__version__"]
