"""PSNR/SSIM against naive reimplementations, plus the evaluate pipeline."""

import csv
import math

import numpy as np
import pytest

from planmae import evaluate, psnr, ssim
from planmae.errors import EmptySplit, GeometryMismatch, TooSmall
from planmae.images import MODE_COLORED, MODE_LINE, PatchGrid, Raster
from planmae.masking import plan_for, plan_random
from planmae.metrics import (
    DEFAULT_EVAL_STRATEGIES,
    TAG_EVAL,
    EvalReport,
    EvalRow,
    format_table,
    psnr_masked,
    write_csv,
)
from planmae.rng import mix
from tests.conftest import rand_raster


def naive_psnr(a, b, peak=1.0):
    total = 0.0
    count = 0
    for v, w in zip(a.data.ravel(), b.data.ravel()):
        total += (v - w) ** 2
        count += 1
    mse = total / count
    return math.inf if mse == 0 else 10.0 * math.log10(peak * peak / mse)


def naive_ssim(a, b, peak=1.0, size=11, sigma=1.5):
    # direct per-window loops; mirrors the documented definition
    x = a.data.mean(axis=2) if a.channels > 1 else a.data[:, :, 0]
    y = b.data.mean(axis=2) if b.channels > 1 else b.data[:, :, 0]
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2 * sigma * sigma))
    w = np.outer(g, g)
    w /= w.sum()
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    values = []
    for r in range(x.shape[0] - size + 1):
        for c in range(x.shape[1] - size + 1):
            wx = x[r : r + size, c : c + size]
            wy = y[r : r + size, c : c + size]
            mx = float((w * wx).sum())
            my = float((w * wy).sum())
            vx = float((w * wx * wx).sum()) - mx * mx
            vy = float((w * wy * wy).sum()) - my * my
            cov = float((w * wx * wy).sum()) - mx * my
            values.append(
                ((2 * mx * my + c1) * (2 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2))
            )
    return float(np.mean(values))


# -- psnr -------------------------------------------------------------------


def test_psnr_identity_is_inf():
    a = rand_raster(0, 16, 16, 1)
    assert psnr(a, a) == math.inf


def test_psnr_20db_case():
    # uniform error 0.1 with peak 1: 10*log10(1/0.01) = 20 exactly
    a = Raster.from_array(np.full((16, 16, 1), 0.5), MODE_LINE)
    b = Raster.from_array(np.full((16, 16, 1), 0.6), MODE_LINE)
    assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)


def test_psnr_one_8bit_step():
    # uniform error of one 8-bit step: 20*log10(255) = 48.1308 dB
    a = Raster.from_array(np.zeros((16, 16, 1)), MODE_LINE)
    b = Raster.from_array(np.full((16, 16, 1), 1.0 / 255.0), MODE_LINE)
    assert psnr(a, b) == pytest.approx(48.130803608679, abs=1e-6)


def test_psnr_matches_naive_oracle():
    for seed in range(20):
        a = rand_raster(seed, 16, 16, 3 if seed % 2 else 1)
        b = rand_raster(seed + 100, 16, 16, 3 if seed % 2 else 1)
        assert psnr(a, b) == pytest.approx(naive_psnr(a, b), abs=1e-9)


def test_psnr_symmetry_and_peak():
    a = rand_raster(1, 16, 16, 1)
    b = rand_raster(2, 16, 16, 1)
    assert psnr(a, b) == pytest.approx(psnr(b, a), abs=1e-12)
    # doubling peak adds 20*log10(2) dB
    assert psnr(a, b, peak=2.0) - psnr(a, b, peak=1.0) == pytest.approx(
        20 * math.log10(2), abs=1e-9
    )


def test_psnr_geometry_mismatch():
    with pytest.raises(GeometryMismatch):
        psnr(rand_raster(0, 16, 16, 1), rand_raster(0, 16, 32, 1))
    with pytest.raises(GeometryMismatch):
        psnr(rand_raster(0, 16, 16, 1), rand_raster(0, 16, 16, 3))


def test_psnr_masked_scopes_to_masked_patches():
    grid = PatchGrid(patch_size=4, rows=4, cols=4)
    a = rand_raster(3, 16, 16, 1)
    data = a.data.copy()
    data[0:4, 0:4, :] = np.clip(data[0:4, 0:4, :] + 0.111, 0.0, 1.0)  # patch 0 only
    b = Raster.from_array(data, MODE_LINE)
    from planmae.masking import MaskPlan

    only_other = MaskPlan.from_indices(grid, [5, 6])
    assert psnr_masked(a, b, only_other) == math.inf  # differing patch not masked
    includes = MaskPlan.from_indices(grid, [0, 5])
    finite = psnr_masked(a, b, includes)
    assert math.isfinite(finite)
    # whole-image psnr sees the same error diluted over 16 patches
    assert psnr(a, b) > finite


# -- ssim -------------------------------------------------------------------


def test_ssim_identity_is_one():
    for channels in (1, 3):
        a = rand_raster(5, 16, 16, channels)
        assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_ssim_matches_naive_oracle():
    for seed in range(20):
        c = 3 if seed % 2 else 1
        a = rand_raster(seed, 14, 17, c)
        b = rand_raster(seed + 50, 14, 17, c)
        assert ssim(a, b) == pytest.approx(naive_ssim(a, b), abs=1e-9)


def test_ssim_symmetry_and_bounds_200_pairs():
    for seed in range(200):
        a = rand_raster(seed, 12, 12, 1)
        b = rand_raster(seed + 1000, 12, 12, 1)
        v = ssim(a, b)
        assert -1.0 <= v <= 1.0
        assert v == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_monotone_degradation():
    base = rand_raster(8, 32, 32, 1)
    rng = np.random.default_rng(0)
    noise = rng.standard_normal(base.data.shape)
    last = 1.0
    for scale in (0.02, 0.08, 0.2, 0.5):
        noisy = Raster.from_array(np.clip(base.data + scale * noise, 0, 1), MODE_LINE)
        value = ssim(base, noisy)
        assert value < last
        last = value


def test_ssim_inverted_image_low():
    a = rand_raster(9, 16, 16, 1)
    b = Raster.from_array(1.0 - a.data, MODE_LINE)
    assert ssim(a, b) < 0.2


def test_ssim_too_small():
    with pytest.raises(TooSmall):
        ssim(rand_raster(0, 8, 8, 1), rand_raster(1, 8, 8, 1))


def test_ssim_geometry_mismatch():
    with pytest.raises(GeometryMismatch):
        ssim(rand_raster(0, 16, 16, 1), rand_raster(0, 16, 16, 3))


# -- evaluate ---------------------------------------------------------------


def identity_fn(image, plan):
    return image


def test_evaluate_identity_stub():
    grid = PatchGrid(patch_size=4, rows=4, cols=4)
    images = [rand_raster(s, 16, 16, 1) for s in range(3)]
    report = evaluate(identity_fn, images, grid)
    assert len(report.rows) == len(DEFAULT_EVAL_STRATEGIES)
    assert [r.method for r in report.rows] == [s for s, _ in DEFAULT_EVAL_STRATEGIES]
    for row in report.rows:
        assert row.psnr == math.inf
        assert row.psnr_masked == math.inf
        assert row.ssim == pytest.approx(1.0, abs=1e-12)
        assert row.n_images == 3
        assert row.data_mode == "Line Drawing"
        assert row.fid == "n/a"


def test_evaluate_default_strategy_table():
    assert DEFAULT_EVAL_STRATEGIES == (
        ("random", 0.80),
        ("center", 0.30),
        ("perimeter", 0.70),
        ("one_sided", 0.30),
        ("corner", 0.75),
    )


def test_evaluate_plan_seeds_vary_per_image():
    grid = PatchGrid(patch_size=4, rows=4, cols=4)
    images = [rand_raster(s, 16, 16, 1) for s in range(4)]
    seen_plans = []

    def spy(image, plan):
        seen_plans.append(plan)
        return image

    evaluate(spy, images, grid, strategies=(("random", 0.5),), seed=3)
    masks = {p.masked for p in seen_plans}
    assert len(masks) > 1  # different image index, different plan
    assert seen_plans[0].seed == mix(3, TAG_EVAL, 0)
    assert seen_plans[2].seed == mix(3, TAG_EVAL, 2)


def test_evaluate_realized_ratio_column():
    grid = PatchGrid(patch_size=4, rows=4, cols=4)
    images = [rand_raster(s, 16, 16, 1) for s in range(2)]
    report = evaluate(identity_fn, images, grid, strategies=(("center", 0.30),))
    # half_up(0.3*16) = 5 masked cells -> 0.3125
    assert report.rows[0].realized_ratio == pytest.approx(5 / 16)


def test_evaluate_empty_split():
    grid = PatchGrid(patch_size=4, rows=4, cols=4)
    with pytest.raises(EmptySplit):
        evaluate(identity_fn, [], grid)


def test_evaluate_reconstruction_errors_propagate():
    grid = PatchGrid(patch_size=4, rows=4, cols=4)

    def broken(image, plan):
        raise GeometryMismatch("bad geometry")

    with pytest.raises(GeometryMismatch):
        evaluate(broken, [rand_raster(0, 16, 16, 1)], grid)


# -- report emission ---------------------------------------------------------


def sample_report():
    row = EvalRow(
        method="one_sided",
        data_mode="Line Drawing",
        fid="n/a",
        psnr=16.2186,
        ssim=0.7946,
        realized_ratio=0.296875,
        n_images=50,
        psnr_masked=11.02,
    )
    inf_row = EvalRow(
        method="random",
        data_mode="Line Drawing",
        fid="n/a",
        psnr=math.inf,
        ssim=1.0,
        realized_ratio=0.8,
        n_images=50,
        psnr_masked=math.inf,
    )
    return EvalReport(rows=(row, inf_row))


def test_format_table():
    text = format_table(sample_report())
    lines = text.splitlines()
    assert "Method" in lines[0] and "PSNR" in lines[0] and "SSIM" in lines[0]
    assert any("One-sided Masking" in line and "16.2186" in line for line in lines)
    assert any("inf" in line for line in lines)
    assert any("n/a" in line for line in lines)


def test_write_csv_roundtrip(tmp_path):
    path = tmp_path / "eval.csv"
    write_csv(sample_report(), str(path))
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2
    assert rows[0]["method"] == "One-sided Masking"  # Table-style label
    assert float(rows[0]["psnr"]) == pytest.approx(16.2186)
    assert rows[1]["psnr"] == "inf"
    assert float(rows[0]["realized_ratio"]) == pytest.approx(0.296875)
