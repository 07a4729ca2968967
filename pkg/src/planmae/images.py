"""Raster images, patch grid geometry, and fixed positional embeddings.

Pixel values live in [0, 1] as floats; 8-bit PNG files map in by v/255
and out by round(v*255).  Patches are P x P x C blocks flattened
row-major, ordered row-major over the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from planmae.errors import (
    BadDim,
    GeometryMismatch,
    InconsistentSequence,
    NonDivisiblePatchSize,
)

MODE_COLORED = "colored"
MODE_LINE = "line_drawing"
_MODE_CHANNELS = {MODE_COLORED: 3, MODE_LINE: 1}


@dataclass(frozen=True)
class Raster:
    """A float image (H, W, C) with values in [0, 1] and a mode tag."""

    height: int
    width: int
    channels: int
    data: np.ndarray
    mode: str

    def __post_init__(self):
        if self.mode not in _MODE_CHANNELS:
            raise ValueError(f"unknown mode {self.mode!r}")
        if _MODE_CHANNELS[self.mode] != self.channels:
            raise ValueError(f"mode {self.mode} requires {_MODE_CHANNELS[self.mode]} channels")
        if self.data.shape != (self.height, self.width, self.channels):
            raise ValueError(
                f"data shape {self.data.shape} != {(self.height, self.width, self.channels)}"
            )
        if self.data.size and (float(self.data.min()) < 0.0 or float(self.data.max()) > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")

    @staticmethod
    def from_array(data: np.ndarray, mode: str) -> "Raster":
        if data.ndim == 2:
            data = data[:, :, None]
        data = np.ascontiguousarray(data, dtype=np.float64)
        h, w, c = data.shape
        return Raster(height=h, width=w, channels=c, data=data, mode=mode)


@dataclass(frozen=True)
class PatchGrid:
    """Non-overlapping square patch tiling of an image."""

    patch_size: int
    rows: int
    cols: int

    @property
    def num_patches(self) -> int:
        return self.rows * self.cols

    @staticmethod
    def for_image(height: int, width: int, patch_size: int) -> "PatchGrid":
        if patch_size <= 0 or height % patch_size or width % patch_size:
            raise NonDivisiblePatchSize(
                f"patch size {patch_size} does not divide {height}x{width}"
            )
        return PatchGrid(patch_size=patch_size, rows=height // patch_size, cols=width // patch_size)

    def cell(self, index: int) -> tuple[int, int]:
        return index // self.cols, index % self.cols


@dataclass(frozen=True)
class PatchSequence:
    """Row-major sequence of flattened patches plus its grid."""

    grid: PatchGrid
    channels: int
    patches: np.ndarray  # (N, P*P*C)

    def __post_init__(self):
        n = self.grid.num_patches
        plen = self.grid.patch_size * self.grid.patch_size * self.channels
        if self.patches.ndim != 2 or self.patches.shape[0] != n or self.patches.shape[1] != plen:
            raise InconsistentSequence(
                f"expected {n} patches of length {plen}, got array of shape {self.patches.shape}"
            )


def patchify(image: Raster, patch_size: int) -> PatchSequence:
    """Split an image into flattened non-overlapping patches.

    Patch i covers grid cell (i // cols, i % cols); each patch vector is
    the row-major flattening of its P x P x C pixel block.
    """
    grid = PatchGrid.for_image(image.height, image.width, patch_size)
    p = patch_size
    blocks = image.data.reshape(grid.rows, p, grid.cols, p, image.channels)
    patches = blocks.transpose(0, 2, 1, 3, 4).reshape(grid.num_patches, p * p * image.channels)
    return PatchSequence(grid=grid, channels=image.channels, patches=np.ascontiguousarray(patches))


def unpatchify(seq: PatchSequence, mode: str | None = None, clamp: bool = False) -> Raster:
    """Exact inverse of patchify.

    clamp=True clips values into [0, 1] first (for model outputs); the
    image mode defaults to line_drawing/colored by channel count.
    """
    grid, c = seq.grid, seq.channels
    p = grid.patch_size
    data = seq.patches
    if clamp:
        data = np.clip(data, 0.0, 1.0)
    blocks = data.reshape(grid.rows, grid.cols, p, p, c)
    image = blocks.transpose(0, 2, 1, 3, 4).reshape(grid.rows * p, grid.cols * p, c)
    if mode is None:
        mode = MODE_LINE if c == 1 else MODE_COLORED
    return Raster.from_array(image, mode)


@dataclass(frozen=True)
class PosEmbedTable:
    """Fixed 2D sine-cosine positional embeddings for a patch grid."""

    grid: PatchGrid
    dim: int
    table: np.ndarray = field(repr=False)  # (N, dim)


def pos_embed(grid: PatchGrid, dim: int) -> PosEmbedTable:
    """Deterministic 2D sine-cosine table.

    The first dim/2 entries encode the column, the last dim/2 the row.
    Within each half, entries alternate sin(p / 10000^(2k/(dim/2))) and
    cos(p / 10000^(2k/(dim/2))) for k = 0 .. dim/4 - 1.
    """
    if dim <= 0 or dim % 4:
        raise BadDim(f"embedding width {dim} must be a positive multiple of 4")
    half = dim // 2
    k = np.arange(half // 2, dtype=np.float64)
    inv_freq = 1.0 / np.power(10000.0, 2.0 * k / half)  # (dim/4,)

    def axis_encoding(positions: np.ndarray) -> np.ndarray:
        angles = positions[:, None] * inv_freq[None, :]  # (N, dim/4)
        enc = np.empty((positions.shape[0], half), dtype=np.float64)
        enc[:, 0::2] = np.sin(angles)
        enc[:, 1::2] = np.cos(angles)
        return enc

    rows = np.repeat(np.arange(grid.rows, dtype=np.float64), grid.cols)
    cols = np.tile(np.arange(grid.cols, dtype=np.float64), grid.rows)
    table = np.concatenate([axis_encoding(cols), axis_encoding(rows)], axis=1)
    return PosEmbedTable(grid=grid, dim=dim, table=table)


def save_png(image: Raster, path) -> None:
    """Write an 8-bit PNG (mode L or RGB); v -> round(v*255)."""
    eight_bit = np.rint(image.data * 255.0).astype(np.uint8)
    if image.channels == 1:
        pil = Image.fromarray(eight_bit[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(eight_bit, mode="RGB")
    pil.save(path, format="PNG")


def load_png(
    path,
    mode: str | None = None,
    expect_size: int | tuple[int, int] | None = None,
    resize: bool = False,
) -> Raster:
    """Read an 8-bit PNG; v -> v/255.

    mode forces a channel layout (converting if needed); otherwise the
    file's own layout picks line_drawing (L) or colored (anything else,
    converted to RGB).  expect_size is a square side or an (height,
    width) pair; a differently sized image raises GeometryMismatch
    unless resize=True, which rescales with nearest-neighbour sampling.
    """
    pil = Image.open(path)
    if mode == MODE_LINE:
        pil = pil.convert("L")
    elif mode == MODE_COLORED:
        pil = pil.convert("RGB")
    elif pil.mode != "L":
        pil = pil.convert("RGB")
    if expect_size is not None:
        h, w = (expect_size, expect_size) if isinstance(expect_size, int) else expect_size
        if pil.size != (w, h):  # PIL size is (width, height)
            if not resize:
                raise GeometryMismatch(
                    f"{path}: image is {pil.size[1]}x{pil.size[0]}, expected {h}x{w}"
                )
            pil = pil.resize((w, h), Image.NEAREST)
    arr = np.asarray(pil, dtype=np.float64) / 255.0
    out_mode = MODE_LINE if pil.mode == "L" else MODE_COLORED
    return Raster.from_array(arr, out_mode)


def encode_png_bytes(image: Raster) -> bytes:
    """PNG-encode a raster to bytes (same mapping as save_png)."""
    import io

    buf = io.BytesIO()
    save_png(image, buf)
    return buf.getvalue()


def decode_png_bytes(data: bytes, mode: str | None = None) -> Raster:
    """Decode PNG bytes to a raster (same mapping as load_png)."""
    import io

    return load_png(io.BytesIO(data), mode=mode)
