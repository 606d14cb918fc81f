"""Unpaired photo <-> Monet style transfer on a from-scratch autodiff core.

The package is a vertical slice: numpy tensors with a reverse-mode tape
(`tensor`, `ops`), U-Net generators and PatchGAN discriminators (`blocks`,
`models`), the cycle-consistent adversarial objective (`losses`), Adam
(`optim`), image IO (`data`), binary checkpoints (`checkpoint`), the
training loop (`training`), loss reports and sample grids (`reporting`),
and a small CLI (`cli`).
"""

from .errors import (CheckpointError, ConfigError, DecodeError, LossCsvError,
                     ShapeError)
from .models import DiscriminatorNet, GeneratorNet, NetConfig
from .rng import Rng
from .tensor import Tape, Tensor, backward
from .training import CycleGanModel, LossBundle, Trainer, load_trainer, save_trainer

__version__ = "0.1.0"

__all__ = [
    "CheckpointError", "ConfigError", "CycleGanModel", "DecodeError",
    "DiscriminatorNet", "GeneratorNet", "LossBundle", "LossCsvError",
    "NetConfig", "Rng", "ShapeError", "Tape", "Tensor", "Trainer",
    "backward", "load_trainer", "save_trainer", "__version__",
]
