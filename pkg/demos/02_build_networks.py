"""Build the two network families and inspect their anatomy.

The generator is an encoder-decoder U-Net: stride-2 convolution blocks
halve the image down to 1x1, stride-2 transposed convolutions build it
back up, and skip connections concatenate each decoder stage with its
mirror-image encoder stage. The discriminator is a patch classifier: a
short stack of stride-2 blocks followed by two valid convolutions, so each
output logit judges one overlapping 70x70 patch of the input.

Run:  python3 demos/02_build_networks.py
"""

import numpy as np

from cyclestyle import NetConfig, Tensor
from cyclestyle.models import (DiscriminatorNet, GeneratorNet,
                               receptive_field)
from cyclestyle.rng import Rng

# A small configuration so this runs instantly; the default NetConfig()
# is the full 256-px / 54M-parameter layout.
config = NetConfig(image_size=64, base_channels=16, depth=6)
rng = Rng(0)

gen = GeneratorNet(config, rng.child("gen"))
disc = DiscriminatorNet(config, rng.child("disc"))

# ----------------------------------------------------------------------
# 1. Shape chains: pass a probe image through with trace=... to see
#    every stage's output shape.
# ----------------------------------------------------------------------
probe = Tensor(np.zeros((1, 64, 64, 3), dtype=np.float32))

gen_trace = []
out = gen.forward(probe, trace=gen_trace)
print("generator stages:")
for name, shape in gen_trace:
    print(f"  {name:<6} -> {shape}")
print("output:", out.shape, "bounded by tanh:",
      float(out.data.min()), "..", float(out.data.max()))

disc_trace = []
logits = disc.forward(probe, trace=disc_trace)
print("\ndiscriminator stages:")
for name, shape in disc_trace:
    print(f"  {name:<6} -> {shape}")
print(f"each of the {logits.shape[1]}x{logits.shape[2]} logits sees a "
      f"{receptive_field()}x{receptive_field()} input patch")

# ----------------------------------------------------------------------
# 2. Parameters are plain named tensors, ready for an optimizer.
# ----------------------------------------------------------------------
gen_params = gen.params()
print(f"\ngenerator: {len(gen_params)} tensors, "
      f"{sum(p.data.size for p in gen_params.values()):,} parameters")
for name in list(gen_params)[:4]:
    print(f"  {name:<14} {gen_params[name].data.shape}")
print("  ...")

disc_params = disc.params()
print(f"discriminator: {len(disc_params)} tensors, "
      f"{sum(p.data.size for p in disc_params.values()):,} parameters")

# ----------------------------------------------------------------------
# 3. Initialization is a pure function of the seed path.
# ----------------------------------------------------------------------
again = GeneratorNet(config, Rng(0).child("gen"))
same = all(np.array_equal(p.data, again.params()[n].data)
           for n, p in gen_params.items())
print("\nsame seed path reproduces the same weights:", same)
