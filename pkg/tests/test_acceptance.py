"""Acceptance gate: one test per shipping criterion, run at the stated
tolerances and time budgets. `pytest -v tests/test_acceptance.py` prints one
pass/fail line per criterion; each test also emits a short evidence line.

These tests are deliberately self-contained: frozen shapes, counts, and
anchor values are restated here rather than imported, so a regression in the
package cannot silently rewrite the gate.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from cyclestyle import ops
from cyclestyle.checkpoint import load_checkpoint
from cyclestyle.cli import main
from cyclestyle.data import steps_per_epoch
from cyclestyle.gradcheck import check_gradients
from cyclestyle.losses import (cycle_consistency_loss, discriminator_loss,
                               generator_adv_loss, identity_loss)
from cyclestyle.models import DiscriminatorNet, GeneratorNet, NetConfig
from cyclestyle.optim import Adam
from cyclestyle.reporting import CSV_HEADER
from cyclestyle.rng import Rng
from cyclestyle.tensor import Tensor
from cyclestyle.training import CycleGanModel, Trainer, load_trainer

from helpers import jiggle, pick_coords, synth_monet, synth_photo
from naive_ref import (NaiveAdam, discriminator_forward_direct,
                       generator_forward_direct)

FIXTURES = Path(__file__).parent / "fixtures" / "tiny_domains"

FULL = NetConfig()          # 256 px, base 64, depth 8, cap 512

GEN_CHAIN_256 = [
    ("down0", (1, 128, 128, 64)), ("down1", (1, 64, 64, 128)),
    ("down2", (1, 32, 32, 256)), ("down3", (1, 16, 16, 512)),
    ("down4", (1, 8, 8, 512)), ("down5", (1, 4, 4, 512)),
    ("down6", (1, 2, 2, 512)), ("down7", (1, 1, 1, 512)),
    ("up0", (1, 2, 2, 1024)), ("up1", (1, 4, 4, 1024)),
    ("up2", (1, 8, 8, 1024)), ("up3", (1, 16, 16, 1024)),
    ("up4", (1, 32, 32, 512)), ("up5", (1, 64, 64, 256)),
    ("up6", (1, 128, 128, 128)), ("out", (1, 256, 256, 3)),
]
DISC_CHAIN_256 = [
    ("down0", (1, 128, 128, 64)), ("down1", (1, 64, 64, 128)),
    ("down2", (1, 32, 32, 256)), ("mid", (1, 31, 31, 512)),
    ("logits", (1, 30, 30, 1)),
]
GEN_PARAM_COUNT = 54_414_979
DISC_PARAM_COUNT = 2_765_569


def note(capfd, text):
    with capfd.disabled():
        print(f"\n    {text}")


# =====================================================================
def test_criterion_1_full_config_shape_conformance(capfd):
    """Generator and discriminator at the reference configuration produce
    exactly the frozen layer-by-layer shape chains and parameter counts."""
    t0 = time.monotonic()
    gen = GeneratorNet(FULL, Rng(0).child("g"))
    disc = DiscriminatorNet(FULL, Rng(0).child("d"))

    gt, dt = [], []
    y = gen.forward(Tensor(np.zeros((1, 256, 256, 3), dtype=np.float32)), trace=gt)
    logits = disc.forward(Tensor(np.zeros((1, 256, 256, 3), dtype=np.float32)), trace=dt)

    assert gt == GEN_CHAIN_256
    assert dt == DISC_CHAIN_256
    assert y.shape == (1, 256, 256, 3)
    assert logits.shape == (1, 30, 30, 1)

    n_gen = sum(p.data.size for p in gen.params().values())
    n_disc = sum(p.data.size for p in disc.params().values())
    assert n_gen == GEN_PARAM_COUNT
    assert n_disc == DISC_PARAM_COUNT

    elapsed = time.monotonic() - t0
    assert elapsed < 30.0
    note(capfd, f"criterion 1: 16+5 layer shapes exact; params "
                f"{n_gen:,}/{n_disc:,}; {elapsed:.1f}s < 30s")


# =====================================================================
def test_criterion_2_gradient_suite_float64(capfd):
    """Analytic gradients match central differences in float64: every
    primitive at rtol 1e-5, full-network composites at rtol 1e-4."""
    t0 = time.monotonic()

    def T(rng, shape, scale=1.0):
        return Tensor(rng.normal(shape, 0.0, scale, np.float64))

    def run(label, f, wrt, rtol, atol, coords=None):
        bad = check_gradients(f, wrt, rtol=rtol, atol=atol, coords=coords)
        assert not bad, f"{label}: " + "; ".join(str(b) for b in bad[:5])

    checked = 0

    # --- primitives, rtol 1e-5
    rng = Rng(100)
    x, k, b = T(rng, (2, 5, 5, 3)), T(rng, (4, 4, 3, 2), 0.5), T(rng, (2,), 0.5)
    run("conv2d s1", lambda: ops.mean_all(ops.conv2d(x, k, b)), {"x": x, "k": k, "b": b},
        1e-5, 1e-8)
    rng = Rng(101)
    x2, k2 = T(rng, (1, 6, 5, 2)), T(rng, (4, 4, 2, 3), 0.5)
    run("conv2d s2", lambda: ops.mean_all(ops.conv2d(x2, k2, stride=2)), {"x": x2, "k": k2},
        1e-5, 1e-8)
    rng = Rng(102)
    x3, k3 = T(rng, (1, 8, 8, 2)), T(rng, (3, 3, 2, 4), 0.5)
    run("conv2d valid", lambda: ops.mean_all(ops.conv2d(x3, k3, stride=3, padding="valid")),
        {"x": x3, "k": k3}, 1e-5, 1e-8)
    rng = Rng(103)
    x4, k4, b4 = T(rng, (2, 3, 3, 4)), T(rng, (4, 4, 3, 4), 0.5), T(rng, (3,), 0.5)
    run("tconv s2", lambda: ops.mean_all(ops.conv2d_transpose(x4, k4, b4, stride=2)),
        {"x": x4, "k": k4, "b": b4}, 1e-5, 1e-8)
    rng = Rng(104)
    x5, k5 = T(rng, (1, 4, 4, 2)), T(rng, (4, 4, 3, 2), 0.5)
    run("tconv s1", lambda: ops.mean_all(ops.conv2d_transpose(x5, k5)), {"x": x5, "k": k5},
        1e-5, 1e-8)
    rng = Rng(105)
    x6 = T(rng, (1, 3, 3, 2))
    w6 = rng.normal((1, 5, 5, 2), 0, 1, np.float64)
    run("pad", lambda: ops.weighted_sum(ops.pad_spatial(x6, 1), w6), {"x": x6}, 1e-5, 1e-8)
    rng = Rng(106)
    x7, g7, b7 = T(rng, (2, 4, 4, 3)), T(rng, (3,)), T(rng, (3,))
    w7 = rng.normal((2, 4, 4, 3), 0, 1, np.float64)
    run("instnorm", lambda: ops.weighted_sum(ops.instance_norm(x7, g7, b7, 1e-5), w7),
        {"x": x7, "g": g7, "b": b7}, 1e-5, 1e-8)
    rng = Rng(108)
    x8 = T(rng, (3, 7))
    x8.data[np.abs(x8.data) < 1e-2] += 0.05
    w8 = rng.normal((3, 7), 0, 1, np.float64)
    run("relu", lambda: ops.weighted_sum(ops.relu(x8), w8), {"x": x8}, 1e-5, 1e-8)
    run("leaky", lambda: ops.weighted_sum(ops.leaky_relu(x8, 0.2), w8), {"x": x8}, 1e-5, 1e-8)
    run("tanh", lambda: ops.weighted_sum(ops.tanh(x8), w8), {"x": x8}, 1e-5, 1e-8)
    rng = Rng(109)
    z9 = T(rng, (2, 5, 5, 1), 1.5)
    y9 = Tensor((rng.uniform((2, 5, 5, 1)) > 0.5).astype(np.float64))
    run("bce", lambda: ops.bce_with_logits_mean(z9, y9), {"z": z9}, 1e-5, 1e-8)
    rng = Rng(110)
    a10, b10 = T(rng, (3, 4)), T(rng, (3, 4))
    run("l1", lambda: ops.l1_mean(a10, b10), {"a": a10, "b": b10}, 1e-5, 1e-8)
    rng = Rng(111)
    a11, b11 = T(rng, (1, 3, 3, 2)), T(rng, (1, 3, 3, 3))
    w11 = rng.normal((1, 3, 3, 5), 0, 1, np.float64)
    run("concat", lambda: ops.weighted_sum(ops.concat_channels(a11, b11), w11),
        {"a": a11, "b": b11}, 1e-5, 1e-8)
    rng = Rng(112)
    x12 = T(rng, (1, 6, 6, 2))
    run("dropout", lambda: ops.mean_all(ops.dropout(x12, 0.4, Rng(55), training=True)),
        {"x": x12}, 1e-5, 1e-8)
    checked += 14

    # --- composite: both generators through cycle + identity, 8x8,
    #     every coordinate of every parameter
    cfg8 = NetConfig(image_size=8, base_channels=2, depth=3)
    crng = Rng(42)
    m_gen = GeneratorNet(cfg8, crng.child("m"), np.float64)
    p_gen = GeneratorNet(cfg8, crng.child("p"), np.float64)
    jiggle(m_gen, crng.child("jm"))
    jiggle(p_gen, crng.child("jp"))
    photo = Tensor(crng.child("x").normal((1, 8, 8, 3), 0, 0.5, np.float64))
    monet = Tensor(crng.child("y").normal((1, 8, 8, 3), 0, 0.5, np.float64))

    def cycle_loss():
        fm = m_gen.forward(photo)
        cp = p_gen.forward(fm)
        fp = p_gen.forward(monet)
        cm = m_gen.forward(fp)
        total = ops.add(cycle_consistency_loss(photo, cp, 10.0),
                        cycle_consistency_loss(monet, cm, 10.0))
        total = ops.add(total, identity_loss(monet, m_gen.forward(monet), 10.0))
        return ops.add(total, identity_loss(photo, p_gen.forward(photo), 10.0))

    wrt = {"photo": photo, "monet": monet}
    for pre, net in (("m", m_gen), ("p", p_gen)):
        for name, p in net.params().items():
            wrt[f"{pre}.{name}"] = p
    n_coords = sum(t.data.size for t in wrt.values())
    run("cycle+identity composite", cycle_loss, wrt, 1e-4, 1e-7)
    checked += n_coords

    # --- composites with the discriminator in the loop (its two valid
    #     convolutions need >= 32 px, the smallest legal size)
    cfg32 = NetConfig(image_size=32, base_channels=2, depth=5)
    arng = Rng(2024)
    am_gen = GeneratorNet(cfg32, arng.child("mg"), np.float64)
    ap_gen = GeneratorNet(cfg32, arng.child("pg"), np.float64)
    am_disc = DiscriminatorNet(cfg32, arng.child("md"), np.float64)
    jiggle(am_gen, arng.child("jm"))
    jiggle(ap_gen, arng.child("jp"))
    jiggle(am_disc, arng.child("jd"))
    aphoto = Tensor(arng.child("x").normal((1, 32, 32, 3), 0, 0.5, np.float64))
    amonet = Tensor(arng.child("y").normal((1, 32, 32, 3), 0, 0.5, np.float64))

    def gen_total():
        fm = am_gen.forward(aphoto)
        cp = ap_gen.forward(fm)
        fp = ap_gen.forward(amonet)
        cm = am_gen.forward(fp)
        adv = generator_adv_loss(am_disc.forward(fm))
        cyc = ops.add(cycle_consistency_loss(aphoto, cp, 10.0),
                      cycle_consistency_loss(amonet, cm, 10.0))
        return ops.add(ops.add(adv, cyc),
                       identity_loss(amonet, am_gen.forward(amonet), 10.0))

    awrt = {"photo": aphoto, "monet": amonet}
    for pre, net in (("mg", am_gen), ("pg", ap_gen), ("md", am_disc)):
        for name, p in net.params().items():
            awrt[f"{pre}.{name}"] = p
    coords = pick_coords(awrt, arng.child("coords"), per_tensor=20)
    run("adversarial generator total", gen_total, awrt, 1e-4, 1e-7, coords=coords)
    checked += sum(len(c) for c in coords.values())

    def disc_loss():
        fm = am_gen.forward(aphoto)
        return discriminator_loss(am_disc.forward(amonet), am_disc.forward(fm))

    dwrt = {"photo": aphoto, "monet": amonet}
    for name, p in am_disc.params().items():
        dwrt[f"md.{name}"] = p
    dcoords = pick_coords(dwrt, arng.child("coords_d"), per_tensor=20)
    run("discriminator loss", disc_loss, dwrt, 1e-4, 1e-7, coords=dcoords)
    checked += sum(len(c) for c in dcoords.values())

    elapsed = time.monotonic() - t0
    assert elapsed < 300.0
    note(capfd, f"criterion 2: {checked} coordinates checked "
                f"(primitives rtol 1e-5, composites 1e-4); {elapsed:.1f}s < 300s")


# =====================================================================
def test_criterion_3_uninformative_discriminator_loss_anchor(capfd):
    """A discriminator emitting all-zero logits scores exactly
    0.5*(bce(0,1)+bce(0,0)) = ln 2 = 0.6931 to four decimals."""
    real = Tensor(np.zeros((1, 30, 30, 1)))
    fake = Tensor(np.zeros((1, 30, 30, 1)))
    loss = discriminator_loss(real, fake).item()
    assert round(loss, 4) == 0.6931
    assert abs(loss - float(np.log(2.0))) < 1e-12
    note(capfd, f"criterion 3: zero-logit discriminator loss {loss:.10f} "
                f"== ln 2 (4 dp: {round(loss, 4)})")


# =====================================================================
def test_criterion_4_epoch_step_arithmetic(capfd):
    """7038 photos vs 300 paintings at batch 4 yields exactly 1759 steps."""
    steps = steps_per_epoch(7038, 300, 4)
    assert steps == 1759
    assert steps_per_epoch(300, 7038, 4) == 1759     # order-independent
    note(capfd, f"criterion 4: steps_per_epoch(7038, 300, 4) == {steps}")


# =====================================================================
def test_criterion_5_single_pair_overfit(capfd):
    """300 steps on one photo and one painting at 64 px: the monet-side
    generator objective must fall at least 40% below its opening level
    (mean of steps 1-10 vs mean of steps 291-300) and both discriminator
    losses must stay strictly inside (0, 1.4) the whole run."""
    t0 = time.monotonic()
    cfg = NetConfig(image_size=64, base_channels=16, depth=6)
    trainer = Trainer(CycleGanModel(cfg, seed=0, dtype=np.float32))
    photo, monet = synth_photo(64), synth_monet(64)

    monet_gen, disc_losses = [], []
    for s in range(1, 301):
        bundle = trainer.train_step(photo, monet, Rng(1234).child("s", s))
        monet_gen.append(bundle.monet_gen_loss)
        disc_losses += [bundle.photo_disc_loss, bundle.monet_disc_loss]

    early = float(np.mean(monet_gen[:10]))
    late = float(np.mean(monet_gen[-10:]))
    assert late <= 0.6 * early, f"drop {(1 - late / early) * 100:.1f}% < 40%"
    lo, hi = min(disc_losses), max(disc_losses)
    assert lo > 0.0 and hi < 1.4, f"disc range [{lo:.4f}, {hi:.4f}]"

    elapsed = time.monotonic() - t0
    assert elapsed < 600.0
    note(capfd, f"criterion 5: monet_gen {early:.3f} -> {late:.3f} "
                f"({(1 - late / early) * 100:.1f}% drop); disc in "
                f"[{lo:.4f}, {hi:.4f}]; {elapsed:.0f}s < 600s")


# =====================================================================
def test_criterion_6_reference_equivalence(capfd):
    """(a) Both network forwards agree with a definition-level loop
    implementation to 1e-10 in float64. (b) The optimizer tracks a textbook
    Adam bit-for-bit over 100 steps."""
    cfg = NetConfig(image_size=32, base_channels=4, depth=5)
    gen = GeneratorNet(cfg, Rng(21), np.float64)
    jiggle(gen, Rng(22))
    xg = Rng(23).normal((1, 32, 32, 3), 0, 0.5, np.float64)
    gen_err = float(np.abs(gen.forward(Tensor(xg)).data
                           - generator_forward_direct(gen, xg)).max())
    assert gen_err <= 1e-10

    disc = DiscriminatorNet(cfg, Rng(24), np.float64)
    jiggle(disc, Rng(25))
    xd = Rng(26).normal((1, 32, 32, 3), 0, 0.5, np.float64)
    disc_err = float(np.abs(disc.forward(Tensor(xd)).data
                            - discriminator_forward_direct(disc, xd)).max())
    assert disc_err <= 1e-10

    rng = Rng(77)
    shapes = [(4, 4, 3, 2), (8,), (2, 3)]
    params = {f"p{i}": Tensor(rng.child("init", i).normal(s, 0, 0.1, np.float32))
              for i, s in enumerate(shapes)}
    opt = Adam(params, lr=3e-3)
    naive = NaiveAdam(shapes, np.float32, lr=3e-3)
    mirror = [params[f"p{i}"].data.copy() for i in range(3)]
    for step in range(1, 101):
        grads = [rng.child("g", step, i).normal(s, 0, 1.0, np.float32)
                 for i, s in enumerate(shapes)]
        for i in range(3):
            params[f"p{i}"].grad = grads[i]
        opt.step()
        naive.step(mirror, grads)
        for i in range(3):
            np.testing.assert_array_equal(params[f"p{i}"].data, mirror[i])

    note(capfd, f"criterion 6: forward deviation gen {gen_err:.2e} / "
                f"disc {disc_err:.2e} (<= 1e-10); Adam bit-identical over 100 steps")


# =====================================================================
def test_criterion_7_checkpoint_resume_fidelity(capfd, tmp_path):
    """Save after one step, reload into a fresh process-state trainer:
    the reloaded model's forward pass and its next training step must be
    bit-identical to the original's."""
    cfg = NetConfig(image_size=32, base_channels=2, depth=5)
    a = Trainer(CycleGanModel(cfg, seed=0, dtype=np.float32))
    photo, monet = synth_photo(32), synth_monet(32)
    a.train_step(photo, monet, Rng(1).child("s", 1))

    path = tmp_path / "resume.ckpt"
    from cyclestyle.training import save_trainer
    save_trainer(a, path)
    b = load_trainer(path)

    fa = a.model.stylize(photo, "photo2monet")
    fb = b.model.stylize(photo, "photo2monet")
    np.testing.assert_array_equal(fa, fb)

    ba = a.train_step(photo, monet, Rng(1).child("s", 2))
    bb = b.train_step(photo, monet, Rng(1).child("s", 2))
    assert ba.as_tuple() == bb.as_tuple()
    for name, p in a.model.all_params().items():
        np.testing.assert_array_equal(p.data, b.model.all_params()[name].data,
                                      err_msg=name)

    meta, tensors = load_checkpoint(path)
    n_params = len(a.model.all_params())
    assert len(tensors) == 3 * n_params + 4
    note(capfd, f"criterion 7: forward and next step bit-identical after "
                f"reload ({len(tensors)} tensors = 3*{n_params}+4)")


# =====================================================================
def test_criterion_8_cli_end_to_end(capfd, tmp_path):
    """The installed commands work on the bundled two-domain fixture:
    train produces a parseable loss table with the exact expected row count,
    a sample grid, and a loadable checkpoint; stylize emits a valid image."""
    t0 = time.monotonic()
    out = tmp_path / "run"
    code = main(["train", "--data", str(FIXTURES), "--out", str(out),
                 "--size", "64", "--epochs", "1", "--batch", "2",
                 "--base-channels", "16", "--seed", "0"])
    assert code == 0

    lines = (out / "losses.csv").read_text().splitlines()
    assert lines[0] == CSV_HEADER
    # 8 photos vs 4 paintings at batch 2 -> 8 // 2 = 4 steps
    assert len(lines) == 1 + 4

    with Image.open(out / "epoch_1.png") as grid:
        assert grid.mode == "RGB"
        assert grid.size[0] == 3 * 64

    ckpt = out / "checkpoint_epoch_1.ckpt"
    trainer = load_trainer(ckpt)
    assert trainer.step_count == 4

    styled = tmp_path / "styled.png"
    code = main(["stylize", "--checkpoint", str(ckpt),
                 "--input", str(FIXTURES / "photos" / "photo_00.png"),
                 "--output", str(styled), "--direction", "photo2monet"])
    assert code == 0
    with Image.open(styled) as im:
        assert im.mode == "RGB"
        assert im.size == (64, 64)
        assert np.asarray(im).dtype == np.uint8

    elapsed = time.monotonic() - t0
    assert elapsed < 300.0
    note(capfd, f"criterion 8: train exit 0, 4 csv rows, grid + checkpoint + "
                f"stylized png OK; {elapsed:.0f}s < 300s")
