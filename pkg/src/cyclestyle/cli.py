"""Command-line interface.

    cyclestyle train   --data DIR --out DIR [--size N] [--epochs N] ...
    cyclestyle stylize --checkpoint FILE --input FILE --output FILE [--direction D]
    cyclestyle report  --losses FILE [--baseline FILE]

`train` writes losses.csv, periodic checkpoints and a per-epoch sample grid
(epoch_<k>.png) into --out. `stylize` runs one image through a trained
generator. `report` prints per-epoch mean losses and, given a baseline CSV,
the final-epoch deltas. Exit codes: 0 success, 1 runtime failure (bad data,
bad checkpoint), 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from PIL import Image

from .data import UnpairedDataset, denormalize, load_image
from .errors import (CheckpointError, ConfigError, DecodeError, LossCsvError,
                     ShapeError)
from .models import NetConfig
from .reporting import (format_delta_table, format_epoch_table, read_loss_csv,
                        render_sample_grid)
from .training import CycleGanModel, Trainer, load_trainer

DIRECTIONS = ("photo2monet", "monet2photo")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclestyle",
        description="Unpaired photo <-> Monet style transfer.")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train the four networks on a two-domain image folder")
    t.add_argument("--data", required=True,
                   help="dataset root containing photos/ and monet/ subdirectories")
    t.add_argument("--out", required=True, help="output directory for logs and checkpoints")
    t.add_argument("--size", type=int, default=256, help="training image size (default 256)")
    t.add_argument("--epochs", type=int, default=1)
    t.add_argument("--batch", type=int, default=1)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--lambda-cycle", type=float, default=10.0)
    t.add_argument("--identity-weight", type=float, default=0.5)
    t.add_argument("--base-channels", type=int, default=64)
    t.add_argument("--depth", type=int, default=None,
                   help="U-Net depth (default: deepest that divides --size)")
    t.add_argument("--channel-cap", type=int, default=512)
    t.add_argument("--lr", type=float, default=2e-4)
    t.add_argument("--flip", action="store_true", help="random horizontal flips")
    t.add_argument("--checkpoint-every", type=int, default=1, metavar="EPOCHS")
    t.add_argument("--verbose", action="store_true", help="log every training step")

    s = sub.add_parser("stylize", help="translate one image with a trained checkpoint")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--direction", choices=DIRECTIONS, default="photo2monet")

    r = sub.add_parser("report", help="summarize a loss CSV")
    r.add_argument("--losses", required=True)
    r.add_argument("--baseline", default=None,
                   help="second loss CSV to diff final-epoch means against")
    return parser


def default_depth(size: int) -> int:
    """Deepest encoder that still divides the image size, capped at 8."""
    if size < 2 or size % 2:
        return 8  # let config validation produce the real complaint
    trailing = (size & -size).bit_length() - 1
    return max(2, min(trailing, 8))


def _cmd_train(args) -> int:
    config = NetConfig(image_size=args.size, base_channels=args.base_channels,
                       depth=args.depth if args.depth is not None else default_depth(args.size),
                       channel_cap=args.channel_cap)
    model = CycleGanModel(config, lambda_cycle=args.lambda_cycle,
                          identity_weight=args.identity_weight, seed=args.seed)
    trainer = Trainer(model, lr=args.lr)
    dataset = UnpairedDataset.from_directory(args.data, args.size)
    probes = ([(img, "photo2monet") for img in dataset.photos[:2]]
              + [(img, "monet2photo") for img in dataset.monet[:2]])
    out_dir = Path(args.out)

    def on_epoch_end(tr, epoch):
        render_sample_grid(tr.model, probes, out_dir / f"epoch_{epoch}.png")

    rows = trainer.fit(dataset, epochs=args.epochs, batch_size=args.batch,
                       out_dir=out_dir, flip=args.flip,
                       checkpoint_every=args.checkpoint_every,
                       on_epoch_end=on_epoch_end,
                       log=print if args.verbose else None)
    print(format_epoch_table(rows))
    print(f"wrote {len(rows)} steps to {out_dir / 'losses.csv'}")
    return 0


def _cmd_stylize(args) -> int:
    trainer = load_trainer(args.checkpoint)
    size = trainer.model.config.image_size
    image = load_image(args.input, size)
    out = trainer.model.stylize(image, args.direction)
    Image.fromarray(denormalize(out[0])).save(args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_report(args) -> int:
    rows = read_loss_csv(args.losses)
    print(format_epoch_table(rows))
    if args.baseline is not None:
        baseline = read_loss_csv(args.baseline)
        print()
        print(format_delta_table(rows, baseline))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    if args.command == "train":
        if args.epochs < 1:
            parser_exit = f"--epochs must be >= 1, got {args.epochs}"
            print(f"usage error: {parser_exit}", file=sys.stderr)
            return 2
        if args.batch < 1:
            print(f"usage error: --batch must be >= 1, got {args.batch}", file=sys.stderr)
            return 2
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "stylize":
            return _cmd_stylize(args)
        return _cmd_report(args)
    except (ConfigError, DecodeError, CheckpointError, LossCsvError, ShapeError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
