"""Train a miniature model end to end on synthetic two-domain data.

One training step updates all four networks at once: each generator
minimizes an adversarial term (fool the other domain's discriminator)
plus the cycle-consistency and identity terms, while each discriminator
learns to separate real images from the generator's fakes. The four
gradient sweeps share one tape and are all taken against the same frozen
parameters, then applied simultaneously.

Run:  python3 demos/03_train_tiny.py          (about 20 seconds)
"""

import numpy as np

from cyclestyle import CycleGanModel, NetConfig, Trainer
from cyclestyle.data import UnpairedDataset
from cyclestyle.rng import Rng


def make_domain(n, size, seed, painterly):
    """Synthetic stand-ins: smooth gradients for photos, wavy strokes for
    paintings. Normalized float32 in [-1, 1], shape (size, size, 3)."""
    rng = np.random.default_rng(seed)
    images = []
    for _ in range(n):
        yy, xx = np.mgrid[0:size, 0:size] / size
        base = np.stack([xx, yy, 0.5 * (xx + yy)], axis=2)
        if painterly:
            base = 0.5 + 0.5 * np.sin(6.0 * base + rng.uniform(0, 6.3))
        tint = rng.uniform(0.6, 1.0, size=3)
        images.append((2.0 * base * tint - 1.0).astype(np.float32))
    return images


dataset = UnpairedDataset(
    photos=make_domain(6, 32, seed=1, painterly=False),
    monet=make_domain(3, 32, seed=2, painterly=True),
)

# Tiny config: 32-px images, 2 base channels. The architecture is the same
# shape as the full model, just narrow, so everything finishes in seconds.
model = CycleGanModel(NetConfig(image_size=32, base_channels=2, depth=5),
                      lambda_cycle=10.0, identity_weight=0.5, seed=0)
trainer = Trainer(model, lr=2e-4)

# ----------------------------------------------------------------------
# 1. Drive a few steps by hand to watch the losses move.
# ----------------------------------------------------------------------
photo = dataset.photos[0][np.newaxis]
monet = dataset.monet[0][np.newaxis]
print("manual steps on one image pair:")
for s in range(1, 6):
    bundle = trainer.train_step(photo, monet, Rng(99).child("step", s))
    print(f"  step {s}: photo_gen {bundle.photo_gen_loss:.4f}  "
          f"monet_gen {bundle.monet_gen_loss:.4f}  "
          f"photo_disc {bundle.photo_disc_loss:.4f}  "
          f"monet_disc {bundle.monet_disc_loss:.4f}")

# ----------------------------------------------------------------------
# 2. Or let fit() run whole epochs: it shuffles both domains, logs every
#    step to losses.csv, and checkpoints at the end of each epoch.
# ----------------------------------------------------------------------
out_dir = "demos/out"
rows = trainer.fit(dataset, epochs=3, batch_size=2, out_dir=out_dir)
final = [r for r in rows if r[0] == 3]
print(f"\nran {len(rows)} steps over 3 epochs; final-epoch mean monet_gen = "
      f"{np.mean([r[4] for r in final]):.4f}")
print(f"wrote {out_dir}/losses.csv and {out_dir}/checkpoint_epoch_3.ckpt")
print("next: python3 demos/04_stylize.py")
