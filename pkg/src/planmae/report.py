"""Figure rendering for training and evaluation runs.

Each CLI run that emits delimited output also drops a matching figure
next to it: a loss curve for training, a per-strategy metric chart for
evaluation, and an original/masked/reconstruction panel for single
reconstructions.  Everything renders through the Agg backend, no
display needed.
"""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from planmae.images import Raster
from planmae.metrics import EvalReport
from planmae.training import LossReport


def save_loss_curve(reports: Sequence[LossReport], path: str) -> None:
    steps = [r.step for r in reports]
    losses = [r.loss for r in reports]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, losses, lw=1.2, color="#3465a4")
    ax.set_xlabel("step")
    ax.set_ylabel("masked MSE")
    if losses and min(losses) > 0:
        ax.set_yscale("log")
    ax.set_title("training loss")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_eval_chart(report: EvalReport, path: str) -> None:
    labels = [r.method_label.replace(" Masking", "") for r in report.rows]
    cap = 99.0  # +inf bars rendered at the axis cap
    psnrs = [min(r.psnr, cap) if not math.isinf(r.psnr) else cap for r in report.rows]
    ssims = [r.ssim for r in report.rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.bar(labels, psnrs, color="#3465a4")
    ax1.set_ylabel("PSNR (dB)")
    ax1.set_title("full-image PSNR by strategy")
    ax1.tick_params(axis="x", rotation=20)
    ax2.bar(labels, ssims, color="#73d216")
    ax2.set_ylabel("SSIM")
    ax2.set_ylim(0.0, 1.05)
    ax2.set_title("SSIM by strategy")
    ax2.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_reconstruction_panel(
    original: Raster, masked: Raster, reconstruction: Raster, path: str
) -> None:
    fig, axes = plt.subplots(1, 3, figsize=(9, 3.4))
    for ax, (img, title) in zip(
        axes,
        ((original, "original"), (masked, "masked input"), (reconstruction, "reconstruction")),
    ):
        data = img.data[:, :, 0] if img.channels == 1 else img.data
        ax.imshow(data, cmap="gray" if img.channels == 1 else None, vmin=0.0, vmax=1.0)
        ax.set_title(title)
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
