"""A tour of the reverse-mode engine underneath the networks.

Every layer in this package is built from a handful of array primitives
(convolutions, normalization, activations, reductions) that record onto a
gradient tape. Calling `backward` on a scalar loss walks that tape once in
reverse and fills in `.grad` for every tensor that contributed.

Run:  python3 demos/01_autodiff_basics.py
"""

import numpy as np

from cyclestyle import Tape, Tensor, backward
from cyclestyle import ops

# ----------------------------------------------------------------------
# 1. Tensors hold data; a Tape records what happens to them.
# ----------------------------------------------------------------------
x = Tensor(np.array([[1.0, -2.0], [0.5, 3.0]], dtype=np.float64))
w = Tensor(np.array([[0.3, -0.1], [0.8, 0.2]], dtype=np.float64))

with Tape() as tape:
    h = ops.tanh(ops.add(x, w))       # elementwise, recorded
    loss = ops.mean_all(h)            # scalar, recorded

print("loss =", loss.item())

# ----------------------------------------------------------------------
# 2. One reverse sweep computes every gradient at once.
# ----------------------------------------------------------------------
backward(tape, loss)
print("d loss / d x =\n", x.grad)
print("d loss / d w =\n", w.grad)

# tanh'(u) = 1 - tanh(u)^2, and mean_all spreads 1/N to each element:
expected = (1.0 - np.tanh(x.data + w.data) ** 2) / x.data.size
assert np.allclose(x.grad, expected)
print("matches the hand-derived formula:", np.allclose(x.grad, expected))

# ----------------------------------------------------------------------
# 3. The same machinery drives a convolution. Gradients flow to the
#    image, the kernel, and the bias in one pass.
# ----------------------------------------------------------------------
rng = np.random.default_rng(0)
image = Tensor(rng.normal(size=(1, 6, 6, 3)))          # NHWC
kernel = Tensor(rng.normal(size=(4, 4, 3, 2)) * 0.1)   # (kh, kw, cin, cout)
bias = Tensor(np.zeros(2))

with Tape() as tape:
    feat = ops.conv2d(image, kernel, bias, stride=2, padding="same")
    loss = ops.mean_all(ops.leaky_relu(feat, 0.2))

backward(tape, loss)
print("\nconv output shape:", feat.shape)              # (1, 3, 3, 2)
print("kernel grad shape:", kernel.grad.shape)

# ----------------------------------------------------------------------
# 4. Sanity-check one coordinate against a finite difference.
# ----------------------------------------------------------------------
def loss_at(delta):
    shifted = Tensor(kernel.data.copy())
    shifted.data[0, 0, 0, 0] += delta
    with Tape():
        f = ops.conv2d(image, shifted, bias, stride=2, padding="same")
        return ops.mean_all(ops.leaky_relu(f, 0.2)).item()

step = 1e-6
numeric = (loss_at(step) - loss_at(-step)) / (2 * step)
analytic = kernel.grad[0, 0, 0, 0]
print(f"kernel[0,0,0,0]: analytic {analytic:.8f} vs numeric {numeric:.8f}")
assert abs(numeric - analytic) < 1e-6
print("finite difference agrees.")
