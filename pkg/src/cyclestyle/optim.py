"""Adam optimizer.

Straight textbook form: biased first/second moment estimates with bias
correction, update p -= lr * mhat / (sqrt(vhat) + eps). Defaults follow the
usual GAN recipe (lr 2e-4, beta1 0.5). One instance owns one network's
parameters; its moments and step counter are part of the checkpoint state.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class Adam:
    def __init__(self, params: dict[str, Tensor], lr: float = 2e-4,
                 beta1: float = 0.5, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def step(self):
        """Apply one update using each parameter's current `.grad`."""
        self.t += 1
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                raise ValueError(f"Adam.step: parameter {name!r} has no gradient")
            m = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            v = self.beta2 * self.v[name] + (1.0 - self.beta2) * (g * g)
            self.m[name] = m
            self.v[name] = v
            mhat = m / (1.0 - self.beta1 ** self.t)
            vhat = v / (1.0 - self.beta2 ** self.t)
            p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
