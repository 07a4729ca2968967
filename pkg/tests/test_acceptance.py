"""Acceptance sweep: every top-level criterion, one printed verdict per test.

Each test prints a single PASS/FAIL line (bypassing pytest capture) with
the measured values and runtime, then asserts.  Criteria:

  1. geometry roundtrip, 100 rasters, P in {4,8,16}, < 10 s
  2. masking suite, 5 strategies x 200 ratios x grids to 32x32, < 10 s
  3. finite-difference gradient check, tiny 64-bit model, 5 seeds, < 2 min
  4. overfit: desk model, 16 images, 500 steps -> final loss <= 10% of step 1
  5. strategy ordering: one_sided@0.30 beats corner@0.75 on PSNR and SSIM
  6. metric oracles within 1e-9 plus fixed dB cases
  7. bit-identical training runs; resume(5)+5 == straight 10
  8. service round trip, 4xx codes, 16 identical concurrent responses
"""

import base64
import concurrent.futures
import hashlib
import math
import time

import numpy as np
import pytest

from planmae import (
    ModelConfig,
    TrainConfig,
    evaluate,
    fit,
    gen_layout,
    grad,
    init_params,
    masked_mse,
    patchify,
    psnr,
    render,
    ssim,
    unpatchify,
)
from planmae.autodiff import Tensor
from planmae.cli import main
from planmae.dataset import TAG_IMAGE
from planmae.images import MODE_LINE, PatchGrid, Raster, decode_png_bytes, encode_png_bytes
from planmae.masking import STRATEGIES, half_up, plan_for, plan_random
from planmae.model import predict_patches, reconstruct
from planmae.rng import Mix64, mix
from tests.conftest import rand_raster
from tests.test_metrics import naive_psnr, naive_ssim


@pytest.fixture(scope="module")
def announce(request):
    # fd-level capture hides even sys.__stderr__, so print through the manager
    manager = request.config.pluginmanager.getplugin("capturemanager")

    def emit(name: str, ok: bool, detail: str) -> None:
        line = f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
        with manager.global_and_fixture_disabled():
            # leading newline: the progress dots leave the cursor mid-line
            print("\n" + line, flush=True)

    return emit


def line_image(seed: int) -> Raster:
    return render(gen_layout(seed), MODE_LINE, 64)


@pytest.fixture(scope="module")
def train_images():
    # the corpus the CLI would build: split 0 of master seed 0, line mode
    return [line_image(mix(0, TAG_IMAGE, 0, i)) for i in range(700)]


@pytest.fixture(scope="module")
def test_images():
    return [line_image(mix(0, TAG_IMAGE, 2, i)) for i in range(50)]


# -- 1: geometry roundtrip -----------------------------------------------------


def test_c1_geometry_roundtrip(announce):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    count = 0
    for patch in (4, 8, 16):
        for i in range(34 if patch == 4 else 33):
            rows = int(rng.integers(1, 5))
            cols = int(rng.integers(1, 5))
            channels = 1 if (i + patch) % 2 else 3
            h, w = rows * patch, cols * patch
            img = rand_raster(int(rng.integers(0, 1 << 31)), h, w, channels)
            back = unpatchify(patchify(img, patch))
            assert np.array_equal(back.data, img.data)
            assert back.mode == img.mode
            count += 1
    elapsed = time.perf_counter() - t0
    ok = count == 100 and elapsed < 10.0
    announce("1 geometry roundtrip", ok, f"{count} rasters exact, {elapsed:.2f}s < 10s")
    assert ok


# -- 2: masking suite ----------------------------------------------------------


def test_c2_masking_suite(announce):
    t0 = time.perf_counter()
    grids = [
        PatchGrid(patch_size=2, rows=4, cols=4),
        PatchGrid(patch_size=2, rows=8, cols=8),
        PatchGrid(patch_size=2, rows=5, cols=7),
        PatchGrid(patch_size=2, rows=32, cols=32),
    ]
    ratio_rng = Mix64(2024)
    ratios = [0.0, 1.0] + [ratio_rng.uniform() for _ in range(198)]
    checked = 0
    for grid in grids:
        n = grid.num_patches
        for ratio in ratios:
            k = half_up(ratio * n)
            for strategy in STRATEGIES:
                plan = plan_for(grid, strategy, ratio, seed=5)
                again = plan_for(grid, strategy, ratio, seed=5)
                assert plan.num_masked == k
                assert plan.masked == again.masked
                assert sorted(plan.masked + plan.visible) == list(range(n))
                checked += 1
    # fixed examples
    g4 = PatchGrid(patch_size=2, rows=4, cols=4)
    fixed = (
        plan_for(g4, "center", 0.25).masked == (5, 6, 9, 10)
        and plan_for(g4, "perimeter", 0.75).masked
        == (0, 1, 2, 3, 4, 7, 8, 11, 12, 13, 14, 15)
        and plan_for(g4, "one_sided", 0.5, side="left").masked
        == (0, 1, 4, 5, 8, 9, 12, 13)
        and plan_for(g4, "corner", 0.75, anchor="tl").visible == (0, 1, 4, 5)
    )
    elapsed = time.perf_counter() - t0
    ok = fixed and checked == len(grids) * 200 * 5 and elapsed < 10.0
    announce(
        "2 masking suite",
        ok,
        f"{checked} plans count/partition/determinism + fixed 4x4 cases, {elapsed:.2f}s < 10s",
    )
    assert ok


# -- 3: gradient check ---------------------------------------------------------


def test_c3_gradient_finite_differences(announce):
    t0 = time.perf_counter()
    config = ModelConfig(
        image_height=4,
        image_width=4,
        patch_size=2,
        channels=1,
        enc_dim=8,
        enc_depth=1,
        enc_heads=2,
        dec_dim=8,
        dec_depth=1,
        dec_heads=2,
        mlp_ratio=2,
    )
    eps = 1e-5
    worst = 0.0

    def loss_value(params, patches, target, plan):
        pred = predict_patches(params, config, patches, plan)
        loss, _ = masked_mse(pred, target, plan)
        return loss

    for seed in range(5):
        params = init_params(config, seed=seed, dtype=np.float64)
        rng = np.random.default_rng(seed)
        patches = rng.random((2, 4, config.patch_dim))
        target = rng.random((2, 4, config.patch_dim))
        plan = plan_random(config.grid, 0.5, seed=seed)
        analytic = grad(loss_value(params, patches, target, plan), params)
        for name, tensor in params.items():
            flat = tensor.data.ravel()
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + eps
                up = float(loss_value(params, patches, target, plan).data)
                flat[i] = keep - eps
                down = float(loss_value(params, patches, target, plan).data)
                flat[i] = keep
                numeric = (up - down) / (2 * eps)
                a = analytic[name].ravel()[i]
                rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-6)
                worst = max(worst, rel)
                assert rel < 1e-4, (name, i, a, numeric)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 120.0
    announce(
        "3 gradient check",
        ok,
        f"5 seeds, max rel err {worst:.2e} < 1e-4, {elapsed:.1f}s < 120s",
    )
    assert ok


# -- 4: overfit ------------------------------------------------------------------


def test_c4_overfit_small_corpus(announce, train_images):
    t0 = time.perf_counter()
    config = ModelConfig.desk()
    corpus = train_images[:16]
    patches = np.stack(
        [patchify(img, config.patch_size).patches for img in corpus]
    ).astype(np.float32)
    params = init_params(config, seed=3)
    cfg = TrainConfig(
        steps=500,
        total_steps=5000,  # near-constant lr after the short warmup
        batch_size=16,
        lr=3.5e-3,
        warmup_steps=100,
        weight_decay=0.0,
        seed=3,
        strategy="random",
        ratio=0.75,
    )
    _, reports = fit(params, config, patches, cfg)
    first = reports[0].loss
    final = reports[-1].loss
    ratio = final / first
    elapsed = time.perf_counter() - t0
    ok = ratio <= 0.10 and elapsed <= 600.0
    announce(
        "4 overfit",
        ok,
        f"step1 {first:.4f} -> step500 {final:.4f}, ratio {ratio:.4f} <= 0.10, "
        f"{elapsed:.0f}s <= 600s",
    )
    assert ok


# -- 5: strategy ordering ----------------------------------------------------------


def test_c5_strategy_ordering(announce, train_images, test_images):
    t0 = time.perf_counter()
    config = ModelConfig.desk()
    patches = np.stack(
        [patchify(img, config.patch_size).patches for img in train_images]
    ).astype(np.float32)
    params = init_params(config, seed=5)
    cfg = TrainConfig(
        steps=3000,
        batch_size=16,
        lr=1e-3,
        weight_decay=0.05,
        seed=5,
        strategy="random",
        ratio=0.75,
    )
    fit(params, config, patches, cfg)

    def reconstruct_fn(image, plan):
        return reconstruct(params, config, image, plan)

    report = evaluate(
        reconstruct_fn,
        test_images,
        config.grid,
        strategies=(("one_sided", 0.30), ("corner", 0.75)),
        seed=0,
    )
    one_sided, corner = report.rows
    elapsed = time.perf_counter() - t0
    ok = one_sided.psnr > corner.psnr and one_sided.ssim > corner.ssim
    announce(
        "5 strategy ordering",
        ok,
        f"one_sided@0.30 psnr {one_sided.psnr:.3f} / ssim {one_sided.ssim:.4f} vs "
        f"corner@0.75 psnr {corner.psnr:.3f} / ssim {corner.ssim:.4f}, {elapsed:.0f}s",
    )
    assert ok


# -- 6: metric oracles ----------------------------------------------------------


def test_c6_metric_oracles(announce):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        c = 3 if seed % 2 else 1
        a = rand_raster(seed, 16, 16, c)
        b = rand_raster(seed + 777, 16, 16, c)
        worst = max(worst, abs(psnr(a, b) - naive_psnr(a, b)))
        worst = max(worst, abs(ssim(a, b) - naive_ssim(a, b)))
    flat_a = Raster.from_array(np.full((16, 16, 1), 0.5), MODE_LINE)
    flat_b = Raster.from_array(np.full((16, 16, 1), 0.6), MODE_LINE)
    fixed_20 = abs(psnr(flat_a, flat_b) - 20.0)
    step_a = Raster.from_array(np.zeros((16, 16, 1)), MODE_LINE)
    step_b = Raster.from_array(np.full((16, 16, 1), 1.0 / 255.0), MODE_LINE)
    fixed_8bit = abs(psnr(step_a, step_b) - 48.130803608679)
    idem = rand_raster(3, 16, 16, 1)
    identity_psnr = psnr(idem, idem)
    identity_ssim = ssim(idem, idem)
    const_ssim = ssim(flat_a, flat_a)
    elapsed = time.perf_counter() - t0
    ok = (
        worst < 1e-9
        and fixed_20 < 1e-9
        and fixed_8bit < 1e-6
        and identity_psnr == math.inf
        and abs(identity_ssim - 1.0) < 1e-12
        and abs(const_ssim - 1.0) < 1e-12
    )
    announce(
        "6 metric oracles",
        ok,
        f"20 pairs max |delta| {worst:.1e} < 1e-9; 20dB/48.1308dB/identity cases hold, "
        f"{elapsed:.2f}s",
    )
    assert ok


# -- 7: training determinism ----------------------------------------------------


def test_c7_training_determinism(announce, tmp_path):
    t0 = time.perf_counter()
    corpus = tmp_path / "corpus"
    assert main([
        "generate-data", "--out", str(corpus),
        "--train", "4", "--val", "1", "--test", "1",
        "--seed", "0", "--mode", "line", "--resolution", "64",
    ]) == 0
    base = [
        "--data", str(corpus),
        "--profile", "desk", "--mode", "line", "--resolution", "64",
        "--batch-size", "2", "--seed", "2",
    ]

    def ckpt_digest(out):
        return hashlib.sha256((out / "model.ckpt").read_bytes()).hexdigest()

    run_a = tmp_path / "a"
    run_b = tmp_path / "b"
    assert main(["train", *base, "--out", str(run_a), "--steps", "10"]) == 0
    assert main(["train", *base, "--out", str(run_b), "--steps", "10"]) == 0
    twin_ok = ckpt_digest(run_a) == ckpt_digest(run_b)

    half = tmp_path / "half"
    resumed = tmp_path / "resumed"
    assert main([
        "train", *base, "--out", str(half), "--steps", "5", "--total-steps", "10",
    ]) == 0
    assert main([
        "train", *base, "--out", str(resumed),
        "--resume", str(half / "model.ckpt"),
        "--steps", "5", "--total-steps", "10",
    ]) == 0
    resume_ok = ckpt_digest(resumed) == ckpt_digest(run_a)
    elapsed = time.perf_counter() - t0
    ok = twin_ok and resume_ok
    announce(
        "7 determinism",
        ok,
        f"twin runs identical: {twin_ok}; resume(5)+5 == straight 10: {resume_ok}, "
        f"{elapsed:.0f}s",
    )
    assert ok


# -- 8: service contract ----------------------------------------------------------


def test_c8_service_contract(announce, tmp_path):
    from starlette.testclient import TestClient

    from planmae import save_checkpoint
    from planmae.service import create_app

    t0 = time.perf_counter()
    config = ModelConfig.desk()
    params = init_params(config, seed=0)
    ckpt = tmp_path / "model.ckpt"
    save_checkpoint(str(ckpt), params, config, step=1, seed=0)

    image = line_image(7)
    b64 = base64.b64encode(encode_png_bytes(image)).decode("ascii")

    with TestClient(create_app(str(ckpt))) as client:
        # ratio=0 round trip: decoded bytes identical to the upload
        r = client.post(
            "/v1/reconstruct", json={"image": b64, "strategy": "random", "ratio": 0.0}
        )
        assert r.status_code == 200
        decoded = decode_png_bytes(base64.b64decode(r.json()["reconstruction"]))
        roundtrip_ok = np.array_equal(
            np.rint(decoded.data * 255).astype(np.uint8),
            np.rint(image.data * 255).astype(np.uint8),
        )

        codes = {}
        checks = [
            ("bad_image", 400, {"image": "!!!", "strategy": "random"}),
            ("bad_geometry", 400, {
                "image": base64.b64encode(
                    encode_png_bytes(rand_raster(0, 32, 32, 1))
                ).decode("ascii"),
                "strategy": "random",
            }),
            ("bad_mask", 400, {"image": b64, "masked_indices": [0, 9999]}),
            ("bad_request", 400, {"image": b64}),
        ]
        for code, status, payload in checks:
            resp = client.post("/v1/reconstruct", json=payload)
            codes[code] = resp.status_code == status and resp.json()["error"] == code
        errors_ok = all(codes.values())

        payload = {"image": b64, "strategy": "center", "ratio": 0.3}

        def call(_):
            resp = client.post("/v1/reconstruct", json=payload)
            assert resp.status_code == 200
            return resp.content

        with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
            bodies = list(pool.map(call, range(16)))
        concurrent_ok = all(body == bodies[0] for body in bodies)

    elapsed = time.perf_counter() - t0
    ok = roundtrip_ok and errors_ok and concurrent_ok
    announce(
        "8 service contract",
        ok,
        f"ratio-0 roundtrip {roundtrip_ok}; 4xx codes {codes}; "
        f"16 concurrent identical {concurrent_ok}, {elapsed:.1f}s",
    )
    assert ok
