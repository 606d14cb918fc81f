"""Loss logs and visual summaries.

The loss CSV has a fixed header and one row per training step:

    epoch,step,photo_gen_loss,photo_disc_loss,monet_gen_loss,monet_disc_loss

epoch and step are 1-based; losses carry at least six significant digits.
Files are rewritten atomically on every flush so a partial row can never be
observed. The report helpers aggregate per-epoch means and compare two runs
by their final-epoch means (current minus baseline).
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

from .data import denormalize
from .errors import LossCsvError

CSV_HEADER = "epoch,step,photo_gen_loss,photo_disc_loss,monet_gen_loss,monet_disc_loss"

# report rows: (label, index into the CSV loss columns)
_REPORT_ORDER = [("photo_gen", 0), ("monet_gen", 2), ("photo_disc", 1), ("monet_disc", 3)]


def write_loss_csv(path, rows):
    """Atomically (re)write the whole loss table."""
    path = Path(path)
    lines = [CSV_HEADER]
    for epoch, step, *losses in rows:
        lines.append(f"{epoch},{step}," + ",".join(f"{v:.8g}" for v in losses))
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_loss_csv(path) -> list[tuple]:
    """Parse and validate a loss CSV; raises LossCsvError on any malformation."""
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines:
        raise LossCsvError(f"{path}: empty file")
    if lines[0] != CSV_HEADER:
        raise LossCsvError(f"{path}: bad header {lines[0]!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 6:
            raise LossCsvError(f"{path}:{lineno}: expected 6 fields, got {len(fields)}")
        try:
            epoch, step = int(fields[0]), int(fields[1])
            losses = tuple(float(f) for f in fields[2:])
        except ValueError as exc:
            raise LossCsvError(f"{path}:{lineno}: {exc}") from exc
        if epoch < 1 or step < 1:
            raise LossCsvError(f"{path}:{lineno}: epoch/step must be >= 1, got {epoch}/{step}")
        rows.append((epoch, step) + losses)
    if not rows:
        raise LossCsvError(f"{path}: no data rows")
    return rows


def epoch_means(rows) -> dict[int, tuple]:
    """Mean of each loss column per epoch, keyed by epoch number."""
    by_epoch: dict[int, list] = {}
    for epoch, _step, *losses in rows:
        by_epoch.setdefault(epoch, []).append(losses)
    return {e: tuple(float(c) for c in np.mean(v, axis=0)) for e, v in sorted(by_epoch.items())}


def format_epoch_table(rows) -> str:
    means = epoch_means(rows)
    out = [f"{'epoch':>5}  {'photo_gen':>10}  {'monet_gen':>10}  {'photo_disc':>10}  {'monet_disc':>10}"]
    for epoch, m in means.items():
        cells = "  ".join(f"{m[i]:>10.4f}" for _label, i in _REPORT_ORDER)
        out.append(f"{epoch:>5}  {cells}")
    return "\n".join(out)


def format_delta_table(current_rows, baseline_rows) -> str:
    """Final-epoch means of the current run minus the baseline run."""
    cur = epoch_means(current_rows)
    base = epoch_means(baseline_rows)
    cur_final = cur[max(cur)]
    base_final = base[max(base)]
    out = ["final-epoch means, current - baseline:"]
    for label, i in _REPORT_ORDER:
        out.append(f"  {label:<11} {cur_final[i] - base_final[i]:+.4f}")
    return "\n".join(out)


def render_sample_grid(model, probes, path):
    """Save a PNG grid: one row per probe image, columns original /
    translated / cycled back. `probes` is a list of (image, direction)
    where image is a normalized (H, W, 3) array."""
    if not probes:
        raise ValueError("render_sample_grid: need at least one probe image")
    reverse = {"photo2monet": "monet2photo", "monet2photo": "photo2monet"}
    cells = []
    for img, direction in probes:
        translated = model.stylize(img[np.newaxis], direction)[0]
        cycled = model.stylize(translated[np.newaxis], reverse[direction])[0]
        cells.append([denormalize(img), denormalize(translated), denormalize(cycled)])
    h, w = cells[0][0].shape[:2]
    canvas = Image.new("RGB", (3 * w, len(cells) * h))
    for r, row in enumerate(cells):
        for c, cell in enumerate(row):
            canvas.paste(Image.fromarray(cell), (c * w, r * h))
    canvas.save(path)
