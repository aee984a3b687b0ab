"""Flat-storage tensors with explicit gradient buffers."""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor", "ShapeError", "NonFiniteError", "assert_finite"]


class ShapeError(ValueError):
    """Operand dimensions are inconsistent with an operation's contract."""


class NonFiniteError(ArithmeticError):
    """A tensor holds NaN or infinite values."""


class Tensor:
    """Dense n-dimensional float array plus an optional gradient buffer.

    ``data`` is row-major; ``grad``, once allocated, always matches
    ``data`` in shape and dtype.
    """

    __slots__ = ("data", "grad")

    def __init__(self, data, grad=None):
        arr = np.asarray(data)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        self.data = arr
        if grad is not None:
            grad = np.asarray(grad, dtype=arr.dtype)
            if grad.shape != arr.shape:
                raise ShapeError(
                    f"grad shape {grad.shape} does not match data shape {arr.shape}"
                )
        self.grad = grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def ensure_grad(self) -> np.ndarray:
        """Allocate (zeroed) the gradient buffer if absent and return it."""
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def copy(self) -> "Tensor":
        return Tensor(self.data.copy(), None if self.grad is None else self.grad.copy())

    def astype(self, dtype) -> "Tensor":
        return Tensor(
            self.data.astype(dtype),
            None if self.grad is None else self.grad.astype(dtype),
        )

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"


def assert_finite(t, name: str = "tensor") -> None:
    """Raise :class:`NonFiniteError` naming the first offending flat index.

    Accepts a :class:`Tensor`, an ndarray, or a Python scalar. Returns
    silently when every element is finite.
    """
    arr = t.data if isinstance(t, Tensor) else np.asarray(t)
    finite = np.isfinite(arr)
    if finite.all():
        return
    flat = np.flatnonzero(~finite.ravel())
    idx = int(flat[0])
    value = arr.ravel()[idx]
    raise NonFiniteError(f"{name} has non-finite value {value!r} at flat index {idx}")
