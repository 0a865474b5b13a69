"""Dense tensor with a gradient buffer; the parameter type of the engine."""

import numpy as np


class Tensor:
    """A dense float64 array paired with a same-shape gradient buffer."""

    __slots__ = ("values", "grad")

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = np.zeros_like(self.values)

    @property
    def shape(self):
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def zero_grad(self):
        self.grad.fill(0.0)

    def check_finite(self, name: str = "tensor"):
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError(f"{name} contains non-finite values")

    def __repr__(self):
        return f"Tensor(shape={self.values.shape})"
