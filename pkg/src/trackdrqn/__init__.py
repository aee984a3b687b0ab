"""Recurrent Q-learning driver for a deterministic pixel-based 2D track simulator."""

from .tensor import Tensor, ShapeError, NonFiniteError, assert_finite
from .optim import ParameterStore, rmsprop_step

__version__ = "0.1.0"

__all__ = [
    "Tensor",
    "ShapeError",
    "NonFiniteError",
    "assert_finite",
    "ParameterStore",
    "rmsprop_step",
    "__version__",
]
