"""Shared fixtures: tiny model configs and small deterministic images."""

import numpy as np
import pytest

from planmae import ModelConfig, init_params
from planmae.images import MODE_COLORED, MODE_LINE, PatchGrid, Raster


def rand_raster(seed: int, height: int = 16, width: int = 16, channels: int = 1) -> Raster:
    rng = np.random.default_rng(seed)
    data = rng.random((height, width, channels))
    mode = MODE_LINE if channels == 1 else MODE_COLORED
    return Raster.from_array(data, mode)


@pytest.fixture(scope="session")
def tiny_config() -> ModelConfig:
    # 4x4 grid of 4px patches: big enough for every strategy, fast to run
    return ModelConfig(
        image_height=16,
        image_width=16,
        patch_size=4,
        channels=1,
        enc_dim=16,
        enc_depth=1,
        enc_heads=2,
        dec_dim=8,
        dec_depth=1,
        dec_heads=2,
        mlp_ratio=2,
    )


@pytest.fixture()
def tiny_params(tiny_config):
    return init_params(tiny_config, seed=0)


@pytest.fixture(scope="session")
def grid_4x4() -> PatchGrid:
    return PatchGrid(patch_size=4, rows=4, cols=4)


@pytest.fixture(scope="session")
def grid_8x8() -> PatchGrid:
    return PatchGrid(patch_size=2, rows=8, cols=8)
