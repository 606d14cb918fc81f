"""Load a trained checkpoint and translate images with it.

A checkpoint stores every parameter plus the full optimizer state in one
self-describing binary file, so `load_trainer` rebuilds the model exactly
as it was saved: the reloaded network's outputs (and even its next
training step) are bit-identical to the original's.

Run:  python3 demos/03_train_tiny.py   (writes demos/out/checkpoint_epoch_3.ckpt)
      python3 demos/04_stylize.py
"""

import sys
from pathlib import Path

import numpy as np
from PIL import Image

from cyclestyle import load_trainer
from cyclestyle.data import denormalize, load_image
from cyclestyle.reporting import render_sample_grid

ckpt = Path("demos/out/checkpoint_epoch_3.ckpt")
if not ckpt.exists():
    sys.exit("run demos/03_train_tiny.py first to produce the checkpoint")

trainer = load_trainer(ckpt)
model = trainer.model
size = model.config.image_size
print(f"loaded {ckpt} (trained {trainer.step_count} steps, {size}px)")

# ----------------------------------------------------------------------
# 1. stylize() maps a normalized (1, H, W, 3) batch through a generator:
#    photo2monet paints a photo, monet2photo does the reverse.
# ----------------------------------------------------------------------
yy, xx = np.mgrid[0:size, 0:size] / size
photo = np.stack([xx, yy, xx * yy], axis=2).astype(np.float32) * 2.0 - 1.0

painted = model.stylize(photo[np.newaxis], "photo2monet")[0]
cycled = model.stylize(painted[np.newaxis], "monet2photo")[0]
print("photo -> painting -> photo round trip, mean absolute drift:",
      float(np.abs(cycled - photo).mean()))

out = Path("demos/out")
Image.fromarray(denormalize(painted)).save(out / "painted.png")
print(f"wrote {out / 'painted.png'}")

# ----------------------------------------------------------------------
# 2. render_sample_grid lays out original / translated / cycled columns,
#    one row per probe image -- the same grid fit() renders per epoch.
# ----------------------------------------------------------------------
render_sample_grid(model, [(photo, "photo2monet")], out / "grid.png")
print(f"wrote {out / 'grid.png'} (columns: original, translated, cycled)")

# ----------------------------------------------------------------------
# 3. The same model object serves arbitrary images off disk: load_image
#    resizes and normalizes to the checkpoint's training size.
# ----------------------------------------------------------------------
Image.fromarray(denormalize(photo)).save(out / "source.png")
reloaded = load_image(out / "source.png", size)
repainted = model.stylize(reloaded, "photo2monet")[0]
drift = float(np.abs(repainted - painted).max())
print(f"same image via PNG round trip stylizes to within {drift:.4f} "
      "(8-bit quantization only)")
