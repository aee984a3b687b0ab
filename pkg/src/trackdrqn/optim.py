"""Named parameter storage and the RMSProp update."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor

__all__ = ["ParameterStore", "rmsprop_step", "RMSPROP_DECAY", "RMSPROP_EPS"]

RMSPROP_DECAY = 0.95
RMSPROP_EPS = 1e-6


class ParameterStore:
    """Insertion-ordered map of named parameter tensors.

    Each parameter owns a same-shaped RMSProp cache entry (the running mean
    of squared gradients); cache keys always equal parameter keys.
    """

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.cache: dict[str, np.ndarray] = {}

    def add(self, name: str, value) -> Tensor:
        if name in self.params:
            raise ValueError(f"parameter {name!r} already registered")
        t = value if isinstance(value, Tensor) else Tensor(value)
        self.params[name] = t
        self.cache[name] = np.zeros_like(t.data)
        return t

    def names(self) -> list[str]:
        return list(self.params)

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __len__(self) -> int:
        return len(self.params)

    def copy(self) -> "ParameterStore":
        fresh = ParameterStore()
        for name, t in self.params.items():
            fresh.params[name] = t.copy()
            fresh.cache[name] = self.cache[name].copy()
        return fresh

    def total_size(self) -> int:
        return sum(t.size for t in self.params.values())


def rmsprop_step(store: ParameterStore, grads: dict, lr: float,
                 decay: float = RMSPROP_DECAY, eps: float = RMSPROP_EPS) -> None:
    """Apply one RMSProp update in place.

    cache <- decay * cache + (1 - decay) * g^2
    param <- param - lr * g / sqrt(cache + eps)

    ``grads`` must carry exactly the store's parameter keys.
    """
    if set(grads) != set(store.params):
        missing = sorted(set(store.params) - set(grads))
        extra = sorted(set(grads) - set(store.params))
        raise ValueError(f"gradient keys mismatch: missing {missing}, unexpected {extra}")
    for name, tensor in store.params.items():
        g = np.asarray(grads[name])
        if g.shape != tensor.shape:
            raise ValueError(f"gradient for {name!r} has shape {g.shape}, expected {tensor.shape}")
        cache = store.cache[name]
        cache *= decay
        cache += (1.0 - decay) * g * g
        tensor.data -= lr * g / np.sqrt(cache + eps)
