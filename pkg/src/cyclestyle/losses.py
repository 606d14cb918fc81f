"""The four training objectives.

All adversarial terms use mean binary cross-entropy on raw logits. The
discriminator loss halves the sum of its real and fake terms, so an
uninformative discriminator (all-zero logits) sits at ln 2 ~ 0.6931 rather
than 2*ln 2. Cycle and identity terms are mean absolute error scaled by
lambda_cycle (identity additionally by `weight`, default 0.5).
"""

from __future__ import annotations

import numpy as np

from . import ops
from .tensor import Tensor


def _const_like(t: Tensor, value: float) -> Tensor:
    return Tensor(np.full(t.shape, value, dtype=t.dtype))


def generator_adv_loss(fake_logits: Tensor) -> Tensor:
    """How far the discriminator is from calling the fakes real."""
    return ops.bce_with_logits_mean(fake_logits, _const_like(fake_logits, 1.0))


def discriminator_loss(real_logits: Tensor, fake_logits: Tensor) -> Tensor:
    """0.5 * (bce(real, 1) + bce(fake, 0))."""
    real_term = ops.bce_with_logits_mean(real_logits, _const_like(real_logits, 1.0))
    fake_term = ops.bce_with_logits_mean(fake_logits, _const_like(fake_logits, 0.0))
    return ops.scale(ops.add(real_term, fake_term), 0.5)


def cycle_consistency_loss(real: Tensor, cycled: Tensor, lambda_cycle: float) -> Tensor:
    """lambda_cycle * mean |real - cycled|."""
    return ops.scale(ops.l1_mean(real, cycled), lambda_cycle)


def identity_loss(real: Tensor, same: Tensor, lambda_cycle: float, weight: float = 0.5) -> Tensor:
    """weight * lambda_cycle * mean |real - same|, for a generator fed its
    own target domain."""
    return ops.scale(ops.l1_mean(real, same), weight * lambda_cycle)
