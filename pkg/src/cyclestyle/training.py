"""Cycle-consistent adversarial training of the photo <-> Monet pair.

One training step runs all six generator passes (translate, cycle back,
identity) and four discriminator passes under a single tape, then performs
four separate backward sweeps -- one per network -- snapshotting each
network's gradients before any parameter moves. The four Adam updates are
therefore simultaneous: every gradient is taken at the same point in
parameter space, and the discriminators see the generators as they were at
the start of the step.

Each generator minimizes
    adversarial + (cycle_photo + cycle_monet) + identity
where both cycle terms are shared between the two generators.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ops, reporting
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import CheckpointError
from .losses import (cycle_consistency_loss, discriminator_loss,
                     generator_adv_loss, identity_loss)
from .models import DiscriminatorNet, GeneratorNet, NetConfig
from .optim import Adam
from .rng import RNG_ALGORITHM, Rng
from .tensor import Tape, Tensor, backward


@dataclass
class LossBundle:
    """Per-step scalar losses, in loss-CSV column order."""
    photo_gen_loss: float
    photo_disc_loss: float
    monet_gen_loss: float
    monet_disc_loss: float

    def as_tuple(self):
        return (self.photo_gen_loss, self.photo_disc_loss,
                self.monet_gen_loss, self.monet_disc_loss)


class CycleGanModel:
    """The four networks plus the loss weights that tie them together."""

    def __init__(self, config: NetConfig, *, lambda_cycle: float = 10.0,
                 identity_weight: float = 0.5, seed: int = 0, dtype=np.float32):
        config.validate()
        self.config = config
        self.lambda_cycle = float(lambda_cycle)
        self.identity_weight = float(identity_weight)
        self.seed = int(seed)
        self.dtype = np.dtype(dtype)
        root = Rng(self.seed)
        self.m_gen = GeneratorNet(config, root.child("m_gen"), self.dtype)      # photo -> monet
        self.p_gen = GeneratorNet(config, root.child("p_gen"), self.dtype)      # monet -> photo
        self.m_disc = DiscriminatorNet(config, root.child("m_disc"), self.dtype)
        self.p_disc = DiscriminatorNet(config, root.child("p_disc"), self.dtype)

    def networks(self) -> dict:
        return {"m_gen": self.m_gen, "p_gen": self.p_gen,
                "m_disc": self.m_disc, "p_disc": self.p_disc}

    def all_params(self) -> dict[str, Tensor]:
        out = {}
        for net_name, net in self.networks().items():
            for pname, p in net.params().items():
                out[f"{net_name}.{pname}"] = p
        return out

    def stylize(self, image: np.ndarray, direction: str = "photo2monet") -> np.ndarray:
        """Translate a normalized (1, H, W, 3) image; eval mode, no dropout."""
        if direction == "photo2monet":
            gen = self.m_gen
        elif direction == "monet2photo":
            gen = self.p_gen
        else:
            raise ValueError(f"unknown direction {direction!r}")
        return gen.forward(Tensor(image.astype(self.dtype)), training=False).data


class Trainer:
    """Owns one Adam optimizer per network and runs the training loop."""

    def __init__(self, model: CycleGanModel, *, lr: float = 2e-4,
                 beta1: float = 0.5, beta2: float = 0.999, eps: float = 1e-8):
        self.model = model
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.optimizers = {
            name: Adam(net.params(), lr=lr, beta1=beta1, beta2=beta2, eps=eps)
            for name, net in model.networks().items()
        }
        self.step_count = 0

    def train_step(self, photo_batch: np.ndarray, monet_batch: np.ndarray,
                   rng: Rng) -> LossBundle:
        """One simultaneous update of all four networks on one unpaired batch."""
        m = self.model
        photo = Tensor(photo_batch.astype(m.dtype, copy=False))
        monet = Tensor(monet_batch.astype(m.dtype, copy=False))

        with Tape() as tape:
            fake_monet = m.m_gen.forward(photo, training=True, rng=rng.child(0))
            cycled_photo = m.p_gen.forward(fake_monet, training=True, rng=rng.child(1))
            fake_photo = m.p_gen.forward(monet, training=True, rng=rng.child(2))
            cycled_monet = m.m_gen.forward(fake_photo, training=True, rng=rng.child(3))
            same_monet = m.m_gen.forward(monet, training=True, rng=rng.child(4))
            same_photo = m.p_gen.forward(photo, training=True, rng=rng.child(5))

            real_monet_logits = m.m_disc.forward(monet)
            fake_monet_logits = m.m_disc.forward(fake_monet)
            real_photo_logits = m.p_disc.forward(photo)
            fake_photo_logits = m.p_disc.forward(fake_photo)

            monet_adv = generator_adv_loss(fake_monet_logits)
            photo_adv = generator_adv_loss(fake_photo_logits)
            total_cycle = ops.add(
                cycle_consistency_loss(monet, cycled_monet, m.lambda_cycle),
                cycle_consistency_loss(photo, cycled_photo, m.lambda_cycle))
            monet_identity = identity_loss(monet, same_monet, m.lambda_cycle, m.identity_weight)
            photo_identity = identity_loss(photo, same_photo, m.lambda_cycle, m.identity_weight)
            monet_gen_total = ops.add(ops.add(monet_adv, total_cycle), monet_identity)
            photo_gen_total = ops.add(ops.add(photo_adv, total_cycle), photo_identity)
            monet_disc = discriminator_loss(real_monet_logits, fake_monet_logits)
            photo_disc = discriminator_loss(real_photo_logits, fake_photo_logits)

        terms = {"monet_adv": monet_adv, "photo_adv": photo_adv,
                 "total_cycle": total_cycle, "monet_identity": monet_identity,
                 "photo_identity": photo_identity, "monet_gen_total": monet_gen_total,
                 "photo_gen_total": photo_gen_total, "monet_disc": monet_disc,
                 "photo_disc": photo_disc}
        for name, t in terms.items():
            if not np.isfinite(t.data).all():
                raise FloatingPointError(
                    f"non-finite loss term '{name}' ({float(t.data):g}) at step "
                    f"{self.step_count + 1}; aborting before the update")

        # Four backward sweeps over the shared tape. Gradients are snapshotted
        # per network before any optimizer runs, so the updates commute.
        objectives = {"m_gen": monet_gen_total, "p_gen": photo_gen_total,
                      "m_disc": monet_disc, "p_disc": photo_disc}
        grads = {}
        nets = m.networks()
        for name, loss in objectives.items():
            tape.zero_grads()
            backward(tape, loss)
            grads[name] = {pname: p.grad for pname, p in nets[name].params().items()}
        for name, opt in self.optimizers.items():
            for pname, p in nets[name].params().items():
                p.grad = grads[name][pname]
            opt.step()

        self.step_count += 1
        return LossBundle(photo_gen_loss=photo_gen_total.item(),
                          photo_disc_loss=photo_disc.item(),
                          monet_gen_loss=monet_gen_total.item(),
                          monet_disc_loss=monet_disc.item())

    def fit(self, dataset, *, epochs: int, batch_size: int, out_dir,
            flip: bool = False, checkpoint_every: int = 1,
            on_epoch_end=None, log=None) -> list[tuple]:
        """Train for `epochs` epochs, flushing losses.csv and a checkpoint as
        we go. Returns all (epoch, step, four losses) rows."""
        if epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {epochs}")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows: list[tuple] = []
        for epoch in range(1, epochs + 1):
            epoch_rng = Rng(self.model.seed, "epoch", epoch)
            for step, (pb, mb) in enumerate(
                    dataset.batches(batch_size, epoch_rng, flip=flip), start=1):
                bundle = self.train_step(pb, mb, epoch_rng.child("step", step))
                rows.append((epoch, step) + bundle.as_tuple())
                if log is not None:
                    log(f"epoch {epoch} step {step}: "
                        f"photo_gen {bundle.photo_gen_loss:.4f} "
                        f"monet_gen {bundle.monet_gen_loss:.4f} "
                        f"photo_disc {bundle.photo_disc_loss:.4f} "
                        f"monet_disc {bundle.monet_disc_loss:.4f}")
            reporting.write_loss_csv(out_dir / "losses.csv", rows)
            if epoch % checkpoint_every == 0 or epoch == epochs:
                save_trainer(self, out_dir / f"checkpoint_epoch_{epoch}.ckpt")
            if on_epoch_end is not None:
                on_epoch_end(self, epoch)
        return rows


def checkpoint_tensors(trainer: Trainer) -> dict[str, np.ndarray]:
    """Flatten parameters, Adam moments and step counters for serialization."""
    tensors: dict[str, np.ndarray] = {}
    for net_name, net in trainer.model.networks().items():
        params = net.params()
        for pname, p in params.items():
            tensors[f"{net_name}.{pname}"] = p.data
        opt = trainer.optimizers[net_name]
        for pname in params:
            tensors[f"{net_name}.adam.m.{pname}"] = opt.m[pname]
        for pname in params:
            tensors[f"{net_name}.adam.v.{pname}"] = opt.v[pname]
        tensors[f"{net_name}.adam.t"] = np.asarray(float(opt.t), dtype=np.float64)
    return tensors


def save_trainer(trainer: Trainer, path):
    m = trainer.model
    c = m.config
    metadata = {
        "image_size": c.image_size, "base_channels": c.base_channels,
        "depth": c.depth, "channel_cap": c.channel_cap,
        "leaky_alpha": repr(c.leaky_alpha), "dropout_rate": repr(c.dropout_rate),
        "norm_eps": repr(c.norm_eps),
        "lambda_cycle": repr(m.lambda_cycle), "identity_weight": repr(m.identity_weight),
        "lr": repr(trainer.lr), "beta1": repr(trainer.beta1),
        "beta2": repr(trainer.beta2), "adam_eps": repr(trainer.eps),
        "seed": m.seed, "rng": RNG_ALGORITHM, "dtype": m.dtype.name,
        "step": trainer.step_count,
    }
    save_checkpoint(path, checkpoint_tensors(trainer), metadata)


def load_trainer(path) -> Trainer:
    """Rebuild a Trainer (networks, optimizer moments, counters) from disk."""
    metadata, tensors = load_checkpoint(path)
    try:
        config = NetConfig(
            image_size=int(metadata["image_size"]),
            base_channels=int(metadata["base_channels"]),
            depth=int(metadata["depth"]),
            channel_cap=int(metadata["channel_cap"]),
            leaky_alpha=float(metadata["leaky_alpha"]),
            dropout_rate=float(metadata["dropout_rate"]),
            norm_eps=float(metadata["norm_eps"]))
        model = CycleGanModel(
            config, lambda_cycle=float(metadata["lambda_cycle"]),
            identity_weight=float(metadata["identity_weight"]),
            seed=int(metadata["seed"]), dtype=np.dtype(metadata["dtype"]))
        trainer = Trainer(model, lr=float(metadata["lr"]),
                          beta1=float(metadata["beta1"]),
                          beta2=float(metadata["beta2"]),
                          eps=float(metadata["adam_eps"]))
        trainer.step_count = int(metadata["step"])
    except KeyError as exc:
        raise CheckpointError(f"{path}: metadata is missing key {exc}") from exc

    expected = checkpoint_tensors(trainer)
    missing = sorted(set(expected) - set(tensors))
    extra = sorted(set(tensors) - set(expected))
    if missing or extra:
        raise CheckpointError(f"{path}: tensor names do not match the model "
                              f"(missing {missing[:5]}, unexpected {extra[:5]})")
    for name, arr in expected.items():
        found = tensors[name]
        if found.shape != arr.shape:
            raise CheckpointError(f"{path}: tensor {name!r} has shape {found.shape}, "
                                  f"expected {arr.shape}")

    for net_name, net in trainer.model.networks().items():
        params = net.params()
        opt = trainer.optimizers[net_name]
        for pname, p in params.items():
            p.data = tensors[f"{net_name}.{pname}"].astype(model.dtype, copy=True)
            opt.m[pname] = tensors[f"{net_name}.adam.m.{pname}"].astype(model.dtype, copy=True)
            opt.v[pname] = tensors[f"{net_name}.adam.v.{pname}"].astype(model.dtype, copy=True)
        opt.t = int(tensors[f"{net_name}.adam.t"][()])
    return trainer
