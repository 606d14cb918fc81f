"""Generator and discriminator networks.

The generator is a U-Net: `depth` stride-2 downsampling blocks shrink the
image to 1x1 at the bottleneck (channel widths double each level up to
`channel_cap`), then `depth - 1` upsampling blocks mirror the path back,
each concatenated with the matching encoder output, and a final transposed
convolution maps to 3 channels through tanh. With the default config
(256px, base 64, depth 8) the encoder widths are 64, 128, 256, then 512
for the remaining five levels.

The discriminator is a PatchGAN: three stride-2 blocks, then two valid 4x4
convolutions separated by 1-pixel zero pads, ending in a single-channel
logit map. Each logit scores one overlapping 70x70 input patch rather than
the whole image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .blocks import DownsampleBlock, KERNEL_SIZE, UpsampleBlock
from .errors import ConfigError, ShapeError
from .rng import Rng
from .tensor import Tensor

IMAGE_CHANNELS = 3
DISC_MIN_IMAGE = 32

# dropout is applied to the first few decoder levels only
N_DROPOUT_UPS = 3


@dataclass(frozen=True)
class NetConfig:
    """Architecture hyperparameters shared by both networks.

    `image_size` must be divisible by 2**depth (the generator's encoder must
    bottom out at a whole number of pixels); the discriminator additionally
    requires at least 32 pixels (its two valid convolutions need the room)
    and enforces that at construction.
    """

    image_size: int = 256
    base_channels: int = 64
    depth: int = 8
    channel_cap: int = 512
    leaky_alpha: float = 0.2
    dropout_rate: float = 0.5
    norm_eps: float = 1e-5

    def validate(self):
        if self.depth < 2:
            raise ConfigError(f"depth must be >= 2, got {self.depth}")
        if self.base_channels < 1:
            raise ConfigError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.channel_cap < self.base_channels:
            raise ConfigError(f"channel_cap {self.channel_cap} < base_channels {self.base_channels}")
        if self.image_size < (1 << self.depth):
            raise ConfigError(f"image_size {self.image_size} < 2**depth = {1 << self.depth}")
        if self.image_size % (1 << self.depth) != 0:
            raise ConfigError(f"image_size {self.image_size} is not divisible by "
                              f"2**depth = {1 << self.depth}")

    def widths(self) -> list[int]:
        """Encoder channel widths, doubling from base up to the cap."""
        return [min(self.base_channels << i, self.channel_cap) for i in range(self.depth)]


class GeneratorNet:
    """U-Net image-to-image generator; output is tanh-bounded to [-1, 1]."""

    def __init__(self, config: NetConfig, rng: Rng, dtype=np.float32):
        config.validate()
        self.config = config
        ch = config.widths()
        self.downs = []
        for i in range(config.depth):
            cin = IMAGE_CHANNELS if i == 0 else ch[i - 1]
            self.downs.append(DownsampleBlock(
                cin, ch[i], norm=(i > 0), alpha=config.leaky_alpha,
                norm_eps=config.norm_eps, rng=rng.child("down", i), dtype=dtype))
        self.ups = []
        for j in range(config.depth - 1):
            cin = ch[config.depth - 1] if j == 0 else 2 * ch[config.depth - 1 - j]
            cout = ch[config.depth - 2 - j]
            self.ups.append(UpsampleBlock(
                cin, cout, dropout=(j < N_DROPOUT_UPS), rate=config.dropout_rate,
                norm_eps=config.norm_eps, rng=rng.child("up", j), dtype=dtype))
        # final tconv takes the last concat (2*ch[0] channels) to RGB
        self.final_kernel = Tensor(rng.child("final").normal(
            (KERNEL_SIZE, KERNEL_SIZE, IMAGE_CHANNELS, 2 * ch[0]), 0.0, 0.02, dtype))
        self.final_bias = Tensor(np.zeros(IMAGE_CHANNELS, dtype=dtype))

    def forward(self, x: Tensor, *, training: bool = False, rng: Rng | None = None,
                trace: list | None = None) -> Tensor:
        n, h, w, c = x.shape
        if c != IMAGE_CHANNELS:
            raise ShapeError(f"generator: expected {IMAGE_CHANNELS}-channel input, got shape {x.shape}")
        if h % (1 << self.config.depth) or w % (1 << self.config.depth):
            raise ShapeError(f"generator: spatial dims {(h, w)} not divisible by "
                             f"2**depth = {1 << self.config.depth}")
        skips = []
        y = x
        for i, blk in enumerate(self.downs):
            y = blk.forward(y)
            skips.append(y)
            if trace is not None:
                trace.append((f"down{i}", y.shape))
        for j, blk in enumerate(self.ups):
            y = blk.forward(y, rng=None if rng is None else rng.child("up", j), training=training)
            y = ops.concat_channels(y, skips[self.config.depth - 2 - j])
            if trace is not None:
                trace.append((f"up{j}", y.shape))
        y = ops.conv2d_transpose(y, self.final_kernel, self.final_bias, stride=2)
        y = ops.tanh(y)
        if trace is not None:
            trace.append(("out", y.shape))
        return y

    def params(self) -> dict[str, Tensor]:
        out = {}
        for i, blk in enumerate(self.downs):
            for k, v in blk.params().items():
                out[f"down{i}.{k}"] = v
        for j, blk in enumerate(self.ups):
            for k, v in blk.params().items():
                out[f"up{j}.{k}"] = v
        out["final.kernel"] = self.final_kernel
        out["final.bias"] = self.final_bias
        return out


class DiscriminatorNet:
    """PatchGAN: maps an image to a spatial grid of real/fake logits."""

    def __init__(self, config: NetConfig, rng: Rng, dtype=np.float32):
        config.validate()
        if config.image_size < DISC_MIN_IMAGE:
            raise ConfigError(f"discriminator needs image_size >= {DISC_MIN_IMAGE}, "
                              f"got {config.image_size}")
        self.config = config
        b = config.base_channels
        widths = [b, 2 * b, 4 * b]
        self.downs = []
        for i, cout in enumerate(widths):
            cin = IMAGE_CHANNELS if i == 0 else widths[i - 1]
            self.downs.append(DownsampleBlock(
                cin, cout, norm=(i > 0), alpha=config.leaky_alpha,
                norm_eps=config.norm_eps, rng=rng.child("down", i), dtype=dtype))
        mid = min(8 * b, config.channel_cap)
        self.mid_kernel = Tensor(rng.child("mid").normal(
            (KERNEL_SIZE, KERNEL_SIZE, widths[-1], mid), 0.0, 0.02, dtype))
        self.mid_gamma = Tensor(np.ones(mid, dtype=dtype))
        self.mid_beta = Tensor(np.zeros(mid, dtype=dtype))
        self.out_kernel = Tensor(rng.child("out").normal(
            (KERNEL_SIZE, KERNEL_SIZE, mid, 1), 0.0, 0.02, dtype))
        self.out_bias = Tensor(np.zeros(1, dtype=dtype))

    def forward(self, x: Tensor, *, trace: list | None = None) -> Tensor:
        n, h, w, c = x.shape
        if c != IMAGE_CHANNELS:
            raise ShapeError(f"discriminator: expected {IMAGE_CHANNELS}-channel input, "
                             f"got shape {x.shape}")
        if h < DISC_MIN_IMAGE or w < DISC_MIN_IMAGE:
            raise ShapeError(f"discriminator: input spatial dims {(h, w)} below minimum "
                             f"{DISC_MIN_IMAGE}")
        y = x
        for i, blk in enumerate(self.downs):
            y = blk.forward(y)
            if trace is not None:
                trace.append((f"down{i}", y.shape))
        y = ops.pad_spatial(y, 1)
        y = ops.conv2d(y, self.mid_kernel, stride=1, padding="valid")
        y = ops.instance_norm(y, self.mid_gamma, self.mid_beta, self.config.norm_eps)
        y = ops.leaky_relu(y, self.config.leaky_alpha)
        if trace is not None:
            trace.append(("mid", y.shape))
        y = ops.pad_spatial(y, 1)
        y = ops.conv2d(y, self.out_kernel, self.out_bias, stride=1, padding="valid")
        if trace is not None:
            trace.append(("logits", y.shape))
        return y

    def params(self) -> dict[str, Tensor]:
        out = {}
        for i, blk in enumerate(self.downs):
            for k, v in blk.params().items():
                out[f"down{i}.{k}"] = v
        out["mid.kernel"] = self.mid_kernel
        out["mid.gamma"] = self.mid_gamma
        out["mid.beta"] = self.mid_beta
        out["out.kernel"] = self.out_kernel
        out["out.bias"] = self.out_bias
        return out


def build_generator(config: NetConfig, rng: Rng, dtype=np.float32) -> GeneratorNet:
    return GeneratorNet(config, rng, dtype)


def build_discriminator(config: NetConfig, rng: Rng, dtype=np.float32) -> DiscriminatorNet:
    return DiscriminatorNet(config, rng, dtype)


def receptive_field(n_stride2: int = 3, n_stride1: int = 2, k: int = KERNEL_SIZE) -> int:
    """Input-pixel span seen by one output logit of the discriminator."""
    rf, jump = 1, 1
    for _ in range(n_stride2):
        rf += (k - 1) * jump
        jump *= 2
    for _ in range(n_stride1):
        rf += (k - 1) * jump
    return rf
