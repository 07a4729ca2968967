"""Asymmetric encoder/decoder for masked floorplan reconstruction.

The encoder is a small pre-norm ViT that only ever sees visible
patches; the decoder rebuilds the full token sequence by splicing a
shared learnable mask token into the masked slots, runs a shallower
transformer, and projects each token back to patch pixels.  Parameters
live in a flat name -> Tensor dict so the optimizer and checkpoint
code never need to know the architecture.

Checkpoints are a single binary container: magic "PMAE", a u32
format version, a u64 manifest length, a UTF-8 JSON manifest (config,
step, seed, tensor directory), then all tensor payloads concatenated
as little-endian float32.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, replace
from typing import Mapping

import numpy as np

from planmae.autodiff import Tensor, concat, gelu, layer_norm, softmax
from planmae.errors import BadConfig, CorruptCheckpoint, GeometryMismatch
from planmae.images import PatchGrid, Raster, patchify, pos_embed, unpatchify
from planmae.masking import MaskPlan
from planmae.rng import Mix64

CHECKPOINT_MAGIC = b"PMAE"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    image_height: int = 256
    image_width: int = 256
    patch_size: int = 16
    channels: int = 3
    enc_dim: int = 192
    enc_depth: int = 4
    enc_heads: int = 3
    dec_dim: int = 96
    dec_depth: int = 2
    dec_heads: int = 3
    mlp_ratio: int = 4

    def __post_init__(self):
        if self.image_height % self.patch_size or self.image_width % self.patch_size:
            raise BadConfig(
                f"image {self.image_height}x{self.image_width} not divisible "
                f"by patch size {self.patch_size}"
            )
        if self.enc_dim % self.enc_heads or self.dec_dim % self.dec_heads:
            raise BadConfig("embedding dims must divide evenly across heads")
        if self.enc_dim % 4 or self.dec_dim % 4:
            raise BadConfig("embedding dims must be multiples of 4 for 2D pos embeds")
        if self.channels not in (1, 3):
            raise BadConfig(f"channels must be 1 or 3, got {self.channels}")

    @property
    def grid(self) -> PatchGrid:
        return PatchGrid.for_image(self.image_height, self.image_width, self.patch_size)

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * self.channels

    @staticmethod
    def desk(channels: int = 1) -> "ModelConfig":
        """Small profile for desk-scale runs on 64x64 plans."""
        return ModelConfig(
            image_height=64,
            image_width=64,
            patch_size=8,
            channels=channels,
            enc_dim=64,
            enc_depth=2,
            enc_heads=4,
            dec_dim=32,
            dec_depth=1,
            dec_heads=4,
            mlp_ratio=4,
        )

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(doc: Mapping) -> "ModelConfig":
        return ModelConfig(**{k: int(doc[k]) for k in asdict(ModelConfig())})


def _normal(rng: Mix64, shape: tuple[int, ...], std: float, dtype) -> np.ndarray:
    """Deterministic truncated N(0, std^2) draws (rejected beyond 2 sigma).

    Box-Muller over the Mix64 stream; out-of-range values are resampled
    from the same stream, so results stay platform-independent.
    """
    n = int(np.prod(shape)) if shape else 1
    out = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        u1 = 1.0 - rng.uniform()  # (0, 1], keeps log() finite
        u2 = rng.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        for z in (r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2)):
            if filled < n and abs(z) <= 2.0:
                out[filled] = z
                filled += 1
    return (std * out).reshape(shape).astype(dtype)


def _block_params(prefix: str, dim: int, mlp_ratio: int, rng: Mix64, dtype) -> dict:
    hidden = dim * mlp_ratio
    p = {
        f"{prefix}.ln1.scale": np.ones(dim, dtype),
        f"{prefix}.ln1.shift": np.zeros(dim, dtype),
        f"{prefix}.attn.wq": _normal(rng, (dim, dim), 0.02, dtype),
        f"{prefix}.attn.bq": np.zeros(dim, dtype),
        f"{prefix}.attn.wk": _normal(rng, (dim, dim), 0.02, dtype),
        f"{prefix}.attn.bk": np.zeros(dim, dtype),
        f"{prefix}.attn.wv": _normal(rng, (dim, dim), 0.02, dtype),
        f"{prefix}.attn.bv": np.zeros(dim, dtype),
        f"{prefix}.attn.wo": _normal(rng, (dim, dim), 0.02, dtype),
        f"{prefix}.attn.bo": np.zeros(dim, dtype),
        f"{prefix}.ln2.scale": np.ones(dim, dtype),
        f"{prefix}.ln2.shift": np.zeros(dim, dtype),
        f"{prefix}.mlp.w1": _normal(rng, (dim, hidden), 0.02, dtype),
        f"{prefix}.mlp.b1": np.zeros(hidden, dtype),
        f"{prefix}.mlp.w2": _normal(rng, (hidden, dim), 0.02, dtype),
        f"{prefix}.mlp.b2": np.zeros(dim, dtype),
    }
    return p


def _block_shapes(prefix: str, dim: int, mlp_ratio: int) -> dict[str, tuple[int, ...]]:
    hidden = dim * mlp_ratio
    return {
        f"{prefix}.ln1.scale": (dim,),
        f"{prefix}.ln1.shift": (dim,),
        f"{prefix}.attn.wq": (dim, dim),
        f"{prefix}.attn.bq": (dim,),
        f"{prefix}.attn.wk": (dim, dim),
        f"{prefix}.attn.bk": (dim,),
        f"{prefix}.attn.wv": (dim, dim),
        f"{prefix}.attn.bv": (dim,),
        f"{prefix}.attn.wo": (dim, dim),
        f"{prefix}.attn.bo": (dim,),
        f"{prefix}.ln2.scale": (dim,),
        f"{prefix}.ln2.shift": (dim,),
        f"{prefix}.mlp.w1": (dim, hidden),
        f"{prefix}.mlp.b1": (hidden,),
        f"{prefix}.mlp.w2": (hidden, dim),
        f"{prefix}.mlp.b2": (dim,),
    }


def expected_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """The exact tensor directory a checkpoint for this config must carry."""
    shapes: dict[str, tuple[int, ...]] = {
        "enc.embed.w": (config.patch_dim, config.enc_dim),
        "enc.embed.b": (config.enc_dim,),
        "enc.norm.scale": (config.enc_dim,),
        "enc.norm.shift": (config.enc_dim,),
        "dec.proj.w": (config.enc_dim, config.dec_dim),
        "mask_token": (config.dec_dim,),
        "dec.norm.scale": (config.dec_dim,),
        "dec.norm.shift": (config.dec_dim,),
        "head.w": (config.dec_dim, config.patch_dim),
        "head.b": (config.patch_dim,),
    }
    for i in range(config.enc_depth):
        shapes.update(_block_shapes(f"enc.blocks.{i}", config.enc_dim, config.mlp_ratio))
    for i in range(config.dec_depth):
        shapes.update(_block_shapes(f"dec.blocks.{i}", config.dec_dim, config.mlp_ratio))
    return shapes


def init_params(config: ModelConfig, seed: int, dtype=np.float32) -> dict[str, Tensor]:
    """Fresh parameter dict, fully determined by (config, seed)."""
    rng = Mix64(seed)
    raw: dict[str, np.ndarray] = {
        "enc.embed.w": _normal(rng, (config.patch_dim, config.enc_dim), 0.02, dtype),
        "enc.embed.b": np.zeros(config.enc_dim, dtype),
    }
    for i in range(config.enc_depth):
        raw.update(_block_params(f"enc.blocks.{i}", config.enc_dim, config.mlp_ratio, rng, dtype))
    raw["enc.norm.scale"] = np.ones(config.enc_dim, dtype)
    raw["enc.norm.shift"] = np.zeros(config.enc_dim, dtype)
    # latent -> decoder width projection; no bias, the mask token and
    # decoder pos embeds already give every slot a learned offset
    raw["dec.proj.w"] = _normal(rng, (config.enc_dim, config.dec_dim), 0.02, dtype)
    raw["mask_token"] = _normal(rng, (config.dec_dim,), 0.02, dtype)
    for i in range(config.dec_depth):
        raw.update(_block_params(f"dec.blocks.{i}", config.dec_dim, config.mlp_ratio, rng, dtype))
    raw["dec.norm.scale"] = np.ones(config.dec_dim, dtype)
    raw["dec.norm.shift"] = np.zeros(config.dec_dim, dtype)
    raw["head.w"] = _normal(rng, (config.dec_dim, config.patch_dim), 0.02, dtype)
    raw["head.b"] = np.zeros(config.patch_dim, dtype)
    return {name: Tensor(arr, requires_grad=True) for name, arr in raw.items()}


def _attention(params: Mapping[str, Tensor], prefix: str, x: Tensor, heads: int) -> Tensor:
    b, n, dim = x.shape
    dh = dim // heads
    q = (x @ params[f"{prefix}.wq"] + params[f"{prefix}.bq"]).reshape(b, n, heads, dh)
    k = (x @ params[f"{prefix}.wk"] + params[f"{prefix}.bk"]).reshape(b, n, heads, dh)
    v = (x @ params[f"{prefix}.wv"] + params[f"{prefix}.bv"]).reshape(b, n, heads, dh)
    q = q.transpose((0, 2, 1, 3))
    k = k.transpose((0, 2, 3, 1))
    v = v.transpose((0, 2, 1, 3))
    scores = softmax((q @ k) * (1.0 / math.sqrt(dh)), axis=-1)
    out = (scores @ v).transpose((0, 2, 1, 3)).reshape(b, n, dim)
    return out @ params[f"{prefix}.wo"] + params[f"{prefix}.bo"]


def _blocks(params: Mapping[str, Tensor], stack: str, depth: int, heads: int, x: Tensor) -> Tensor:
    for i in range(depth):
        p = f"{stack}.blocks.{i}"
        h = layer_norm(x, params[f"{p}.ln1.scale"], params[f"{p}.ln1.shift"])
        x = x + _attention(params, f"{p}.attn", h, heads)
        h = layer_norm(x, params[f"{p}.ln2.scale"], params[f"{p}.ln2.shift"])
        h = gelu(h @ params[f"{p}.mlp.w1"] + params[f"{p}.mlp.b1"])
        x = x + (h @ params[f"{p}.mlp.w2"] + params[f"{p}.mlp.b2"])
    return layer_norm(x, params[f"{stack}.norm.scale"], params[f"{stack}.norm.shift"])


def encode(
    params: Mapping[str, Tensor], config: ModelConfig, patches: np.ndarray, plan: MaskPlan
) -> Tensor:
    """Run the encoder over visible patches only.

    patches is (B, N, P*P*C); the result is (B, N_visible, enc_dim),
    rows ordered by ascending visible patch index.
    """
    if plan.grid != config.grid:
        raise GeometryMismatch(
            f"plan grid {plan.grid.rows}x{plan.grid.cols}/P{plan.grid.patch_size} does not "
            f"match model grid {config.grid.rows}x{config.grid.cols}/P{config.grid.patch_size}"
        )
    if patches.ndim != 3 or patches.shape[1:] != (config.grid.num_patches, config.patch_dim):
        raise GeometryMismatch(
            f"expected patches of shape (B, {config.grid.num_patches}, "
            f"{config.patch_dim}), got {patches.shape}"
        )
    visible = list(plan.visible)
    dtype = params["enc.embed.w"].dtype
    if not visible:
        return Tensor(np.zeros((patches.shape[0], 0, config.enc_dim), dtype))
    pe = pos_embed(config.grid, config.enc_dim).table.astype(dtype)
    x = Tensor(np.ascontiguousarray(patches[:, visible, :], dtype=dtype))
    x = x @ params["enc.embed.w"] + params["enc.embed.b"]
    x = x + Tensor(pe[visible])
    return _blocks(params, "enc", config.enc_depth, config.enc_heads, x)


def decode(
    params: Mapping[str, Tensor], config: ModelConfig, latents: Tensor, plan: MaskPlan
) -> Tensor:
    """Predict pixel values for every patch slot.

    Visible latents are projected to decoder width, mask tokens fill the
    masked slots, and the concatenation is permuted back to patch order
    before the decoder stack runs.  Returns (B, N, P*P*C).
    """
    b = latents.shape[0]
    n = config.grid.num_patches
    dtype = params["dec.proj.w"].dtype
    n_masked = plan.num_masked
    parts = []
    if latents.shape[1]:
        parts.append(latents @ params["dec.proj.w"])
    if n_masked:
        filler = Tensor(np.zeros((b, n_masked, config.dec_dim), dtype))
        parts.append(filler + params["mask_token"].reshape(1, 1, config.dec_dim))
    tokens = parts[0] if len(parts) == 1 else concat(parts, axis=1)
    order = list(plan.visible) + list(plan.masked)
    inverse = np.argsort(np.asarray(order, dtype=np.intp))
    x = tokens.take(inverse, axis=1)
    x = x + Tensor(pos_embed(config.grid, config.dec_dim).table.astype(dtype))
    x = _blocks(params, "dec", config.dec_depth, config.dec_heads, x)
    return x @ params["head.w"] + params["head.b"]


def predict_patches(
    params: Mapping[str, Tensor], config: ModelConfig, patches: np.ndarray, plan: MaskPlan
) -> Tensor:
    """encode + decode in one call; the training loss consumes this."""
    return decode(params, config, encode(params, config, patches, plan), plan)


def reconstruct(
    params: Mapping[str, Tensor], config: ModelConfig, image: Raster, plan: MaskPlan
) -> Raster:
    """Composite reconstruction of a single image under a mask plan.

    Visible patches are copied from the input verbatim; masked patches
    come from the decoder, clamped to [0, 1].
    """
    if (image.height, image.width) != (config.image_height, config.image_width):
        raise GeometryMismatch(
            f"image is {image.height}x{image.width}, model expects "
            f"{config.image_height}x{config.image_width}"
        )
    if image.channels != config.channels:
        raise GeometryMismatch(
            f"image has {image.channels} channel(s), model expects {config.channels}"
        )
    seq = patchify(image, config.patch_size)
    batch = seq.patches[None, :, :]
    pred = predict_patches(params, config, batch, plan).data[0]
    out = seq.patches.copy()
    masked = list(plan.masked)
    if masked:
        out[masked] = np.clip(pred[masked], 0.0, 1.0)
    composite = type(seq)(grid=seq.grid, channels=seq.channels, patches=out)
    return unpatchify(composite, mode=image.mode)


# -- checkpoint container -------------------------------------------------


def save_checkpoint(
    path: str,
    params: Mapping[str, Tensor],
    config: ModelConfig,
    step: int,
    seed: int,
    moments: Mapping[str, np.ndarray] | None = None,
) -> None:
    """Write params (and optional optimizer moments) to one file.

    Moment arrays are stored under an "opt." name prefix so a plain
    inference load can ignore them.  Tensor payloads are always
    little-endian float32 in sorted-name order.
    """
    tensors: dict[str, np.ndarray] = {name: t.data for name, t in params.items()}
    if moments:
        tensors.update({f"opt.{name}": arr for name, arr in moments.items()})
    directory = []
    payload = bytearray()
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        directory.append({"name": name, "shape": list(arr.shape), "offset": len(payload)})
        payload.extend(arr.tobytes())
    manifest = json.dumps(
        {"config": config.to_json(), "step": step, "seed": seed, "tensors": directory},
        sort_keys=True,
    ).encode("utf-8")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(CHECKPOINT_VERSION.to_bytes(4, "little"))
        f.write(len(manifest).to_bytes(8, "little"))
        f.write(manifest)
        f.write(bytes(payload))
    os.replace(tmp, path)


def load_checkpoint(
    path: str, dtype=np.float32
) -> tuple[dict[str, Tensor], ModelConfig, int, int, dict[str, np.ndarray] | None]:
    """Read a checkpoint; returns (params, config, step, seed, moments).

    moments is None when the checkpoint carries no optimizer state.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise CorruptCheckpoint(f"{path}: bad magic {blob[:4]!r}")
    version = int.from_bytes(blob[4:8], "little")
    if version != CHECKPOINT_VERSION:
        raise CorruptCheckpoint(f"{path}: unsupported version {version}")
    mlen = int.from_bytes(blob[8:16], "little")
    try:
        manifest = json.loads(blob[16 : 16 + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpoint(f"{path}: unreadable manifest") from exc
    payload = blob[16 + mlen :]
    config = ModelConfig.from_json(manifest["config"])
    params: dict[str, Tensor] = {}
    moments: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + 4 * count
        if end > len(payload):
            raise CorruptCheckpoint(f"{path}: tensor {entry['name']} overruns payload")
        arr = np.frombuffer(payload[start:end], dtype="<f4").reshape(shape).astype(dtype)
        if entry["name"].startswith("opt."):
            moments[entry["name"][4:]] = arr
        else:
            params[entry["name"]] = Tensor(arr, requires_grad=True)
    expected = expected_shapes(config)
    if set(params) != set(expected):
        missing = sorted(set(expected) - set(params))
        extra = sorted(set(params) - set(expected))
        raise CorruptCheckpoint(
            f"{path}: tensor directory disagrees with config "
            f"(missing {missing or 'none'}, unexpected {extra or 'none'})"
        )
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise CorruptCheckpoint(
                f"{path}: tensor {name} has shape {params[name].shape}, config implies {shape}"
            )
    for key, arr in moments.items():
        base = key[2:]  # strip "m." / "v."
        if base not in expected or arr.shape != expected[base]:
            raise CorruptCheckpoint(f"{path}: optimizer moment {key} does not match config")
    return params, config, int(manifest["step"]), int(manifest["seed"]), moments or None


def with_overrides(config: ModelConfig, **kwargs) -> ModelConfig:
    """Copy of config with the given fields replaced (validates again)."""
    return replace(config, **kwargs)
