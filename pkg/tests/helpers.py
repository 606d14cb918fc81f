"""Shared test utilities: deterministic synthetic images, parameter jiggling,
and coordinate subsampling for the slower gradient checks."""

import numpy as np

from cyclestyle.rng import Rng


def synth_photo(size=64):
    """A deterministic 'photo': smooth color gradients plus a flat disc."""
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    r = np.sqrt((xx - 0.35) ** 2 + (yy - 0.4) ** 2)
    img = np.stack([0.8 * xx + 0.1, 0.7 * yy, 0.25 * (xx + yy) + 0.2], axis=-1)
    img[r < 0.2] = [0.9, 0.6, 0.2]
    return (img * 2 - 1).astype(np.float32)[None]


def synth_monet(size=64):
    """A deterministic 'painting': sinusoidal brush-stroke-ish bands."""
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    swirl = np.sin(6 * xx + 3 * yy) * 0.3 + 0.5
    img = np.stack([swirl, 0.4 + 0.3 * np.cos(5 * yy), 0.6 - 0.3 * swirl], axis=-1)
    return (np.clip(img, 0, 1) * 2 - 1).astype(np.float32)[None]


def jiggle(net, rng: Rng, scale=0.15):
    """Move every parameter off its init value.

    Freshly built nets sit on a non-generic surface (norm betas exactly zero
    puts instance norms at their degenerate point and ReLUs exactly at their
    kink), where one-sided finite differences disagree with the chosen
    subgradient. Gradient checks probe at a generic nearby point instead.
    """
    for name, p in net.params().items():
        p.data = p.data + rng.child(name).normal(p.shape, 0.0, scale, p.dtype)


def pick_coords(wrt, rng: Rng, per_tensor=20):
    """A fixed random subset of coordinates per tensor (all, if small)."""
    out = {}
    for name, t in wrt.items():
        if t.size <= per_tensor:
            flat = np.arange(t.size)
        else:
            flat = rng.child(name).permutation(t.size)[:per_tensor]
        out[name] = [np.unravel_index(i, t.shape) for i in sorted(flat)]
    return out
