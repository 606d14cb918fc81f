"""Encoder/decoder building blocks shared by the generator and discriminator.

Both blocks use 4x4 kernels at stride 2 (halving or doubling the spatial
size), no bias on the convolution (the norm's beta plays that role), and
weights drawn from N(0, 0.02) as is customary for this family of GANs.
"""

from __future__ import annotations

import numpy as np

from . import ops
from .rng import Rng
from .tensor import Tensor

KERNEL_SIZE = 4
STRIDE = 2
INIT_STD = 0.02


class DownsampleBlock:
    """conv(4x4, stride 2, same, no bias) -> optional instance norm -> leaky ReLU."""

    def __init__(self, cin: int, cout: int, *, norm: bool = True, alpha: float = 0.2,
                 norm_eps: float = 1e-5, rng: Rng, dtype=np.float32):
        self.norm = norm
        self.alpha = alpha
        self.norm_eps = norm_eps
        self.kernel = Tensor(rng.normal((KERNEL_SIZE, KERNEL_SIZE, cin, cout), 0.0, INIT_STD, dtype))
        if norm:
            self.gamma = Tensor(np.ones(cout, dtype=dtype))
            self.beta = Tensor(np.zeros(cout, dtype=dtype))

    def forward(self, x: Tensor) -> Tensor:
        y = ops.conv2d(x, self.kernel, stride=STRIDE, padding="same")
        if self.norm:
            y = ops.instance_norm(y, self.gamma, self.beta, self.norm_eps)
        return ops.leaky_relu(y, self.alpha)

    def params(self) -> dict[str, Tensor]:
        if self.norm:
            return {"kernel": self.kernel, "gamma": self.gamma, "beta": self.beta}
        return {"kernel": self.kernel}


class UpsampleBlock:
    """tconv(4x4, stride 2, same, no bias) -> instance norm -> optional dropout -> ReLU."""

    def __init__(self, cin: int, cout: int, *, dropout: bool = False, rate: float = 0.5,
                 norm_eps: float = 1e-5, rng: Rng, dtype=np.float32):
        self.dropout = dropout
        self.rate = rate
        self.norm_eps = norm_eps
        # transposed-conv kernel layout: (kh, kw, cout, cin)
        self.kernel = Tensor(rng.normal((KERNEL_SIZE, KERNEL_SIZE, cout, cin), 0.0, INIT_STD, dtype))
        self.gamma = Tensor(np.ones(cout, dtype=dtype))
        self.beta = Tensor(np.zeros(cout, dtype=dtype))

    def forward(self, x: Tensor, *, rng: Rng | None = None, training: bool = False) -> Tensor:
        y = ops.conv2d_transpose(x, self.kernel, stride=STRIDE)
        y = ops.instance_norm(y, self.gamma, self.beta, self.norm_eps)
        if self.dropout and training:
            if rng is None:
                raise ValueError("UpsampleBlock: training forward with dropout needs an rng")
            y = ops.dropout(y, self.rate, rng, training)
        return ops.relu(y)

    def params(self) -> dict[str, Tensor]:
        return {"kernel": self.kernel, "gamma": self.gamma, "beta": self.beta}
