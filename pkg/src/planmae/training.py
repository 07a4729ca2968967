"""Loss, optimizer and the deterministic training loop.

Everything a step consumes is derived from (seed, step) alone: batch
membership comes from per-epoch seeded permutations and the mask plan
from a per-step derived seed.  Resuming from a checkpoint at step k
therefore replays exactly the steps a straight run would have taken,
and with saved optimizer moments the parameters match bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from planmae.autodiff import Tensor
from planmae.errors import BadConfig, BadRatio, EmptyCorpus, ShapeMismatch
from planmae.masking import MaskPlan, plan_for
from planmae.model import ModelConfig
from planmae.model import predict_patches
from planmae.rng import Mix64, mix

TAG_EPOCH = 0x45504F43  # "EPOC"
TAG_MASK = 0x4D41534B  # "MASK"


def masked_mse(pred: Tensor, target: np.ndarray, plan: MaskPlan) -> tuple[Tensor, int]:
    """Mean squared error over the pixel values of masked patches only.

    pred and target are (B, N, P*P*C); the mean runs over every scalar
    in the masked rows (B * N_masked * P*P*C values).  With nothing
    masked the loss is identically zero and carries no gradient.
    """
    masked = list(plan.masked)
    if not masked:
        return Tensor(np.zeros((), dtype=pred.dtype)), 0
    diff = pred.take(masked, axis=1) - Tensor(
        np.ascontiguousarray(target[:, masked, :], dtype=pred.dtype)
    )
    n_values = diff.data.size
    return diff.square().sum() * (1.0 / n_values), n_values


def grad(loss: Tensor, params: Mapping[str, Tensor]) -> dict[str, np.ndarray]:
    """Gradients of loss w.r.t. every parameter (zeros where unreached)."""
    for t in params.values():
        t.grad = None
    if loss.requires_grad:
        loss.backward()
    return {
        name: (t.grad if t.grad is not None else np.zeros_like(t.data))
        for name, t in params.items()
    }


@dataclass
class OptState:
    """AdamW first/second moments plus the shared step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    def moments(self) -> dict[str, np.ndarray]:
        """Flatten to checkpoint tensors, "m."/"v." name prefixes."""
        out = {f"m.{k}": arr for k, arr in self.m.items()}
        out.update({f"v.{k}": arr for k, arr in self.v.items()})
        return out


def init_opt(
    params: Mapping[str, Tensor],
    moments: Mapping[str, np.ndarray] | None = None,
    t: int = 0,
) -> OptState:
    """Zero moments, or rehydrate from checkpoint moment tensors."""
    m = {}
    v = {}
    for name, p in params.items():
        if moments and f"m.{name}" in moments:
            m[name] = np.array(moments[f"m.{name}"], dtype=p.dtype)
            v[name] = np.array(moments[f"v.{name}"], dtype=p.dtype)
        else:
            m[name] = np.zeros_like(p.data)
            v[name] = np.zeros_like(p.data)
    return OptState(m=m, v=v, t=t)


def step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    opt: OptState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.95),
    eps: float = 1e-8,
    weight_decay: float = 0.05,
) -> None:
    """One AdamW update, in place.

    Decoupled weight decay: p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p),
    applied uniformly to every tensor.  Parameters update in sorted name
    order so runs are bitwise reproducible.
    """
    b1, b2 = betas
    for name in sorted(params):
        if grads[name].shape != params[name].data.shape:
            raise ShapeMismatch(
                f"gradient for {name} has shape {grads[name].shape}, "
                f"parameter has {params[name].data.shape}"
            )
    opt.t += 1
    c1 = 1.0 - b1**opt.t
    c2 = 1.0 - b2**opt.t
    for name in sorted(params):
        p = params[name]
        g = grads[name].astype(p.dtype, copy=False)
        opt.m[name] = b1 * opt.m[name] + (1.0 - b1) * g
        opt.v[name] = b2 * opt.v[name] + (1.0 - b2) * (g * g)
        m_hat = opt.m[name] / c1
        v_hat = opt.v[name] / c2
        p.data = p.data - lr * (m_hat / (np.sqrt(v_hat) + eps) + weight_decay * p.data)


def lr_at(
    step_index: int,
    total_steps: int,
    base_lr: float,
    warmup_frac: float = 0.05,
    warmup_steps: int | None = None,
) -> float:
    """Linear warmup then cosine decay; step_index counts from 0.

    Warmup length defaults to warmup_frac of the horizon; an explicit
    warmup_steps overrides the fraction.
    """
    warmup = warmup_steps if warmup_steps is not None else max(1, round(warmup_frac * total_steps))
    warmup = max(1, warmup)
    if step_index < warmup:
        return base_lr * (step_index + 1) / warmup
    if total_steps <= warmup:
        return base_lr
    progress = (step_index - warmup) / (total_steps - warmup)
    return 0.5 * base_lr * (1.0 + math.cos(math.pi * progress))


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for one training run.

    total_steps fixes the schedule horizon; a run resumed at step k
    with the same total_steps sees identical learning rates, which is
    what makes split runs reproduce straight runs exactly.
    """

    steps: int = 1000
    total_steps: int | None = None
    batch_size: int = 16
    lr: float = 1.5e-4
    betas: tuple[float, float] = (0.9, 0.95)
    eps: float = 1e-8
    weight_decay: float = 0.05
    warmup_frac: float = 0.05
    warmup_steps: int | None = None
    seed: int = 0
    strategy: str = "random"
    ratio: float = 0.75
    side: str = "left"
    anchor: str = "tl"

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1:
            raise BadConfig("steps must be >= 0 and batch_size >= 1")
        if self.total_steps is not None and self.total_steps < self.steps:
            raise BadConfig("total_steps must be >= steps when given")
        if not 0.0 <= self.ratio <= 1.0:
            raise BadRatio(f"masking ratio {self.ratio} outside [0, 1]")

    @property
    def horizon(self) -> int:
        return self.total_steps if self.total_steps is not None else self.steps


@dataclass(frozen=True)
class LossReport:
    step: int
    loss: float
    n_masked_values: int
    realized_ratio: float
    lr: float
    strategy: str
    ratio: float


def batch_indices(seed: int, step_index: int, corpus_size: int, batch_size: int) -> list[int]:
    """Sample membership for one step, derived statelessly.

    Each epoch shuffles range(corpus_size) with a seed mixed from
    (seed, epoch); steps walk the permutation in contiguous slices.
    Short corpora wrap around instead of shrinking the batch.
    """
    if corpus_size < 1:
        raise EmptyCorpus("training corpus is empty")
    if corpus_size <= batch_size:
        return [i % corpus_size for i in range(batch_size)]
    per_epoch = corpus_size // batch_size
    epoch, pos = divmod(step_index, per_epoch)
    perm = list(range(corpus_size))
    Mix64(mix(seed, TAG_EPOCH, epoch)).shuffle(perm)
    return perm[pos * batch_size : (pos + 1) * batch_size]


def plan_at(cfg: TrainConfig, grid, step_index: int) -> MaskPlan:
    """The mask plan used at a given step (random strategies reseed per step)."""
    return plan_for(
        grid,
        cfg.strategy,
        cfg.ratio,
        seed=mix(cfg.seed, TAG_MASK, step_index),
        side=cfg.side,
        anchor=cfg.anchor,
    )


def fit(
    params: Mapping[str, Tensor],
    model_cfg: ModelConfig,
    patches: np.ndarray,
    cfg: TrainConfig,
    start_step: int = 0,
    opt: OptState | None = None,
    on_step: Callable[[LossReport], None] | None = None,
) -> tuple[OptState, list[LossReport]]:
    """Run cfg.steps optimizer steps starting at global step start_step.

    patches is the pre-patchified corpus, (M, N, P*P*C) float32.
    Updates params in place and returns the optimizer state plus one
    LossReport per step.
    """
    if patches.ndim != 3:
        raise BadConfig(f"expected (M, N, D) patch array, got shape {patches.shape}")
    if opt is None:
        opt = init_opt(params, t=start_step)
    reports: list[LossReport] = []
    for k in range(cfg.steps):
        s = start_step + k
        rows = batch_indices(cfg.seed, s, patches.shape[0], cfg.batch_size)
        batch = np.ascontiguousarray(patches[rows])
        plan = plan_at(cfg, model_cfg.grid, s)
        pred = predict_patches(params, model_cfg, batch, plan)
        loss, n_values = masked_mse(pred, batch, plan)
        grads = grad(loss, params)
        lr = lr_at(s, cfg.horizon, cfg.lr, cfg.warmup_frac, cfg.warmup_steps)
        step(params, grads, opt, lr, cfg.betas, cfg.eps, cfg.weight_decay)
        report = LossReport(
            step=s + 1,
            loss=float(loss.data),
            n_masked_values=n_values,
            realized_ratio=plan.realized_ratio,
            lr=lr,
            strategy=cfg.strategy,
            ratio=cfg.ratio,
        )
        reports.append(report)
        if on_step is not None:
            on_step(report)
    return opt, reports
