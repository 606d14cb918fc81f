"""Image IO and the unpaired two-domain dataset.

Pixels live in [-1, 1] inside the engine (matching the generator's tanh
output): uint8 -> x/127.5 - 1 on the way in, (x+1)*127.5 rounded-and-clipped
on the way out. Round-tripping every uint8 value through float32 is exact.

A dataset root holds two directories, `photos/` and `monet/`, scanned in
lexicographic filename order. The two domains are unpaired and may have
different sizes; an epoch is driven by the larger domain while the smaller
one is resampled (reshuffled each time it runs out), so per-epoch usage
counts within a domain never differ by more than one.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError
from .rng import Rng

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def decode_image(path) -> np.ndarray:
    """Read an image file as (H, W, 3) uint8, converting any mode to RGB."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode image file {path}: {exc}") from exc


def resize_image(arr: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize of (H, W, 3) uint8 to (size, size, 3)."""
    if arr.shape[:2] == (size, size):
        return arr
    return np.asarray(Image.fromarray(arr).resize((size, size), Image.BILINEAR))


def normalize(arr: np.ndarray) -> np.ndarray:
    """uint8 [0, 255] -> float32 [-1, 1]."""
    return arr.astype(np.float32) / 127.5 - 1.0


def denormalize(arr: np.ndarray) -> np.ndarray:
    """float [-1, 1] -> uint8, rounding to nearest and clipping."""
    return np.clip(np.rint((arr + 1.0) * 127.5), 0, 255).astype(np.uint8)


def load_image(path, size: int) -> np.ndarray:
    """Decode, resize and normalize one file to a (1, size, size, 3) batch."""
    return normalize(resize_image(decode_image(path), size))[np.newaxis]


def scan_image_files(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"image directory not found: {directory}")
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def load_domain(directory, size: int, *, strict: bool = True) -> list[np.ndarray]:
    """Load every image under `directory` as normalized (size, size, 3) float32.

    With strict=True (default) a broken file aborts the scan with a
    DecodeError naming it; otherwise broken files are skipped.
    """
    images = []
    for path in scan_image_files(directory):
        try:
            arr = decode_image(path)
        except DecodeError:
            if strict:
                raise
            continue
        images.append(normalize(resize_image(arr, size)))
    if not images:
        raise ValueError(f"no decodable images in {directory}")
    return images


def maybe_flip(arr: np.ndarray, rng: Rng, enabled: bool) -> np.ndarray:
    """Random horizontal flip with p=0.5 when enabled; identity otherwise."""
    if enabled and rng.coin(0.5):
        return arr[:, ::-1, :]
    return arr


def epoch_plan(n: int, draws: int, rng: Rng) -> np.ndarray:
    """Index sequence of length `draws` over n items: whole reshuffles
    concatenated and truncated, so usage counts differ by at most one."""
    if n < 1:
        raise ValueError("epoch_plan: need at least one item")
    reps = max(1, math.ceil(draws / n))
    idx = np.concatenate([rng.permutation(n) for _ in range(reps)])
    return idx[:draws]


def steps_per_epoch(n_photos: int, n_monet: int, batch_size: int) -> int:
    """floor(max(domain sizes) / batch): the larger domain drives the epoch."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = max(n_photos, n_monet)
    if n < batch_size:
        raise ValueError(f"batch_size {batch_size} exceeds larger domain size {n}")
    return n // batch_size


class UnpairedDataset:
    """Two unpaired image domains, held in memory as normalized arrays."""

    def __init__(self, photos: list[np.ndarray], monet: list[np.ndarray]):
        if not photos or not monet:
            raise ValueError("both domains must be non-empty")
        self.photos = photos
        self.monet = monet

    @classmethod
    def from_directory(cls, root, size: int, *, strict: bool = True) -> "UnpairedDataset":
        root = Path(root)
        return cls(load_domain(root / "photos", size, strict=strict),
                   load_domain(root / "monet", size, strict=strict))

    def batches(self, batch_size: int, rng: Rng, *, flip: bool = False):
        """Yield (photo_batch, monet_batch) float32 arrays of shape
        (batch, H, W, 3) for one epoch."""
        steps = steps_per_epoch(len(self.photos), len(self.monet), batch_size)
        draws = steps * batch_size
        plan_p = epoch_plan(len(self.photos), draws, rng.child("photos"))
        plan_m = epoch_plan(len(self.monet), draws, rng.child("monet"))
        flip_rng = rng.child("flip")
        for s in range(steps):
            sel_p = plan_p[s * batch_size : (s + 1) * batch_size]
            sel_m = plan_m[s * batch_size : (s + 1) * batch_size]
            pb = np.stack([maybe_flip(self.photos[i], flip_rng, flip) for i in sel_p])
            mb = np.stack([maybe_flip(self.monet[i], flip_rng, flip) for i in sel_m])
            yield pb, mb
