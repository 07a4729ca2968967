"""Floorplan completion with a lightweight masked autoencoder.

The package covers the full desk-scale pipeline: rasters and patch
geometry, deterministic masking strategies, an asymmetric ViT
encoder/decoder trained with a masked-MSE objective, a procedural
floorplan corpus, PSNR/SSIM evaluation with report output, a CLI, and an
HTTP inference service.
"""

from planmae.errors import (
    BadConfig,
    BadDim,
    BadRatio,
    ConfigError,
    ConstraintUnsatisfiable,
    CorruptCheckpoint,
    EmptyCorpus,
    EmptySplit,
    GeometryMismatch,
    InconsistentSequence,
    NonDivisiblePatchSize,
    PlanMaeError,
    ShapeMismatch,
    TooSmall,
)
from planmae.images import (
    PatchGrid,
    PatchSequence,
    PosEmbedTable,
    Raster,
    load_png,
    patchify,
    pos_embed,
    save_png,
    unpatchify,
)
from planmae.masking import (
    MaskPlan,
    plan_center,
    plan_corner,
    plan_for,
    plan_one_sided,
    plan_perimeter,
    plan_random,
)
from planmae.model import (
    ModelConfig,
    decode,
    encode,
    init_params,
    load_checkpoint,
    reconstruct,
    save_checkpoint,
)
from planmae.training import (
    LossReport,
    OptState,
    TrainConfig,
    fit,
    grad,
    init_opt,
    masked_mse,
    step,
)
from planmae.dataset import LayoutSpec, build_corpus, gen_layout, render
from planmae.metrics import EvalReport, EvalRow, evaluate, psnr, ssim

__version__ = "0.1.0"

__all__ = [
    "PlanMaeError",
    "NonDivisiblePatchSize",
    "InconsistentSequence",
    "BadDim",
    "BadRatio",
    "BadConfig",
    "GeometryMismatch",
    "CorruptCheckpoint",
    "ShapeMismatch",
    "EmptyCorpus",
    "EmptySplit",
    "ConstraintUnsatisfiable",
    "TooSmall",
    "ConfigError",
    "Raster",
    "PatchGrid",
    "PatchSequence",
    "PosEmbedTable",
    "patchify",
    "unpatchify",
    "pos_embed",
    "load_png",
    "save_png",
    "MaskPlan",
    "plan_random",
    "plan_center",
    "plan_perimeter",
    "plan_one_sided",
    "plan_corner",
    "plan_for",
    "ModelConfig",
    "init_params",
    "encode",
    "decode",
    "reconstruct",
    "save_checkpoint",
    "load_checkpoint",
    "LossReport",
    "OptState",
    "TrainConfig",
    "masked_mse",
    "grad",
    "step",
    "init_opt",
    "fit",
    "LayoutSpec",
    "gen_layout",
    "render",
    "build_corpus",
    "EvalReport",
    "EvalRow",
    "psnr",
    "ssim",
    "evaluate",
    "__version__",
]
