"""Command line entry point.

Subcommands: generate-data, train, reconstruct, evaluate, serve.
Every invocation prints a single-line effective-config JSON dump
before doing work, so a run can be reproduced from its log alone.
Exit codes: 0 success, 2 usage error (argparse), 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from planmae import dataset as ds
from planmae import metrics as mt
from planmae import model as mdl
from planmae.config import (
    MaskConfig,
    RunConfig,
    load_config,
    normalize_mode,
    override,
)
from planmae.errors import PlanMaeError
from planmae.images import MODE_LINE, load_png, patchify, save_png
from planmae.masking import MaskPlan, gray_out, plan_for
from planmae.training import TrainConfig, fit, init_opt


def _dump_effective(command: str, cfg: RunConfig, extras: dict) -> None:
    doc = {"command": command, "config": cfg.to_json(), **extras}
    print("effective-config " + json.dumps(doc, sort_keys=True))


def _parse_strategies(text: str) -> list[tuple[str, float]]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, ratio = item.partition(":")
        name = name.strip().replace("-", "_")
        if not ratio:
            raise PlanMaeError(f"strategy spec {item!r} must look like name:ratio")
        out.append((name, float(ratio)))
    if not out:
        raise PlanMaeError("no strategies given")
    return out


def _model_for_run(cfg: RunConfig, args) -> mdl.ModelConfig:
    """Model section, profile flag, then mode/resolution coherence."""
    model = cfg.model
    if getattr(args, "profile", None) == "desk":
        model = mdl.ModelConfig.desk()
    mode = cfg.dataset.mode
    channels = 1 if mode == MODE_LINE else 3
    res = cfg.dataset.resolution
    return mdl.with_overrides(
        model, channels=channels, image_height=res, image_width=res
    )


def _train_config(cfg: RunConfig) -> TrainConfig:
    m = cfg.masking
    return override(
        cfg.training,
        strategy=m.strategy,
        ratio=m.ratio,
        side=m.side,
        anchor=m.anchor,
    )


def cmd_generate_data(args) -> int:
    cfg = load_config(args.config)
    data = override(
        cfg.dataset,
        root=args.out,
        train=args.train,
        val=args.val,
        test=args.test,
        seed=args.seed,
        mode=normalize_mode(args.mode) if args.mode else None,
        resolution=args.resolution,
    )
    cfg = override(cfg, dataset=data)
    _dump_effective("generate-data", cfg, {})
    manifest = ds.build_corpus(
        data.root,
        counts=(data.train, data.val, data.test),
        seed=data.seed,
        mode=data.mode,
        resolution=data.resolution,
    )
    print(f"manifest {Path(manifest.root) / 'manifest.json'}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    cfg = override(
        cfg,
        dataset=override(
            cfg.dataset,
            root=args.data,
            mode=normalize_mode(args.mode) if args.mode else None,
            resolution=args.resolution,
        ),
        masking=override(
            cfg.masking,
            strategy=args.strategy,
            ratio=args.ratio,
            side=args.side,
            anchor=args.anchor,
        ),
        training=override(
            cfg.training,
            steps=args.steps,
            total_steps=args.total_steps,
            batch_size=args.batch_size,
            lr=args.lr,
            seed=args.seed,
        ),
    )
    if cfg.dataset.root is None:
        raise PlanMaeError("no corpus directory given (--data or [dataset].root)")

    if args.resume:
        params, model_cfg, start_step, seed, moments = mdl.load_checkpoint(args.resume)
        cfg = override(cfg, training=override(cfg.training, seed=seed))
        opt = init_opt(params, moments=moments, t=start_step)
    else:
        model_cfg = _model_for_run(cfg, args)
        params = mdl.init_params(model_cfg, cfg.training.seed)
        start_step = 0
        opt = None
    train_cfg = _train_config(cfg)
    _dump_effective(
        "train",
        cfg,
        {"model": model_cfg.to_json(), "resume": args.resume, "start_step": start_step},
    )

    rasters = ds.load_split(cfg.dataset.root, "train", mode=cfg.dataset.mode)
    for r in rasters:
        if (r.height, r.width, r.channels) != (
            model_cfg.image_height,
            model_cfg.image_width,
            model_cfg.channels,
        ):
            raise PlanMaeError(
                f"corpus image {r.height}x{r.width}x{r.channels} does not match "
                f"model {model_cfg.image_height}x{model_cfg.image_width}x{model_cfg.channels}"
            )
    patches = np.stack(
        [patchify(r, model_cfg.patch_size).patches for r in rasters]
    ).astype(np.float32)

    out = Path(args.out)
    os.makedirs(out, exist_ok=True)
    log_every = max(1, train_cfg.steps // 20)

    def on_step(report):
        if report.step % log_every == 0 or report.step == start_step + 1:
            print(f"step {report.step}  loss {report.loss:.6f}  lr {report.lr:.2e}")

    opt, reports = fit(
        params, model_cfg, patches, train_cfg, start_step=start_step, opt=opt, on_step=on_step
    )
    ckpt_path = out / "model.ckpt"
    mdl.save_checkpoint(
        str(ckpt_path),
        params,
        model_cfg,
        step=start_step + train_cfg.steps,
        seed=train_cfg.seed,
        moments=opt.moments(),
    )
    with open(out / "loss.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss", "realized_ratio", "lr", "strategy"])
        for r in reports:
            writer.writerow(
                [r.step, f"{r.loss:.8f}", f"{r.realized_ratio:.6f}", f"{r.lr:.8e}", r.strategy]
            )
    from planmae.report import save_loss_curve

    save_loss_curve(reports, str(out / "loss.png"))
    print(f"checkpoint {ckpt_path}")
    print(f"loss-csv {out / 'loss.csv'}")
    print(f"loss-figure {out / 'loss.png'}")
    return 0


def _plan_from_args(args, grid, masking: MaskConfig) -> MaskPlan:
    if args.plan:
        with open(args.plan, "r", encoding="utf-8") as f:
            plan = MaskPlan.from_json(json.load(f))
        if plan.grid != grid:
            raise PlanMaeError(
                f"plan grid {plan.grid.rows}x{plan.grid.cols}/{plan.grid.patch_size} does "
                f"not match model grid {grid.rows}x{grid.cols}/{grid.patch_size}"
            )
        return plan
    m = override(
        masking,
        strategy=args.strategy,
        ratio=args.ratio,
        seed=args.seed,
        side=args.side,
        anchor=args.anchor,
    )
    return plan_for(grid, m.strategy, m.ratio, seed=m.seed, side=m.side, anchor=m.anchor)


def cmd_reconstruct(args) -> int:
    cfg = load_config(args.config)
    params, model_cfg, step, _, _ = mdl.load_checkpoint(args.checkpoint)
    _dump_effective(
        "reconstruct", cfg, {"model": model_cfg.to_json(), "checkpoint": args.checkpoint}
    )
    image = load_png(
        args.input,
        mode=MODE_LINE if model_cfg.channels == 1 else None,
        expect_size=(model_cfg.image_height, model_cfg.image_width),
        resize=args.resize,
    )
    plan = _plan_from_args(args, model_cfg.grid, cfg.masking)
    recon = mdl.reconstruct(params, model_cfg, image, plan)
    masked_vis = gray_out(image, plan)
    out = Path(args.out)
    os.makedirs(out, exist_ok=True)
    save_png(masked_vis, str(out / "masked.png"))
    save_png(recon, str(out / "reconstruction.png"))
    with open(out / "plan.json", "w", encoding="utf-8") as f:
        json.dump(plan.to_json(), f, indent=2, sort_keys=True)
    from planmae.report import save_reconstruction_panel

    save_reconstruction_panel(image, masked_vis, recon, str(out / "panel.png"))
    print(f"masked {out / 'masked.png'}")
    print(f"reconstruction {out / 'reconstruction.png'}")
    print(f"plan {out / 'plan.json'}")
    print(f"panel {out / 'panel.png'}")
    print(f"realized-ratio {plan.realized_ratio:.6f}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    params, model_cfg, step, _, _ = mdl.load_checkpoint(args.checkpoint)
    strategies = (
        _parse_strategies(args.strategies)
        if args.strategies
        else list(mt.DEFAULT_EVAL_STRATEGIES)
    )
    data_root = args.data or cfg.dataset.root
    if data_root is None:
        raise PlanMaeError("no corpus directory given (--data or [dataset].root)")
    _dump_effective(
        "evaluate",
        cfg,
        {
            "model": model_cfg.to_json(),
            "checkpoint": args.checkpoint,
            "strategies": [[s, r] for s, r in strategies],
            "split": args.split,
        },
    )
    mode = MODE_LINE if model_cfg.channels == 1 else None
    images = ds.load_split(data_root, args.split, mode=mode)
    if args.limit:
        images = images[: args.limit]

    def reconstruct_fn(image, plan):
        return mdl.reconstruct(params, model_cfg, image, plan)

    report = mt.evaluate(
        reconstruct_fn,
        images,
        model_cfg.grid,
        strategies=strategies,
        seed=args.seed if args.seed is not None else cfg.masking.seed,
        side=args.side or cfg.masking.side,
        anchor=args.anchor or cfg.masking.anchor,
    )
    out = Path(args.out)
    os.makedirs(out, exist_ok=True)
    mt.write_csv(report, str(out / "eval.csv"))
    from planmae.report import save_eval_chart

    save_eval_chart(report, str(out / "eval.png"))
    print(mt.format_table(report))
    print(f"eval-csv {out / 'eval.csv'}")
    print(f"eval-figure {out / 'eval.png'}")
    return 0


def cmd_serve(args) -> int:
    cfg = load_config(args.config)
    service_cfg = override(
        cfg.service, checkpoint=args.checkpoint, host=args.host, port=args.port
    )
    if service_cfg.checkpoint is None:
        raise PlanMaeError("no checkpoint given (--checkpoint or [service].checkpoint)")
    cfg = override(cfg, service=service_cfg)
    _dump_effective("serve", cfg, {})
    import uvicorn

    from planmae.service import create_app

    app = create_app(
        service_cfg.checkpoint,
        cors_origin=service_cfg.cors_origin,
        max_body_bytes=service_cfg.max_body_bytes,
    )
    uvicorn.run(app, host=service_cfg.host, port=service_cfg.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planmae",
        description="Masked-autoencoder reconstruction of partial floorplans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-data", help="write a procedural floorplan corpus")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--config", default=None)
    g.add_argument("--train", type=int, default=None)
    g.add_argument("--val", type=int, default=None)
    g.add_argument("--test", type=int, default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--mode", choices=("colored", "line", "line_drawing"), default=None)
    g.add_argument("--resolution", type=int, default=None)
    g.set_defaults(func=cmd_generate_data)

    t = sub.add_parser("train", help="train on a corpus directory")
    t.add_argument("--data", default=None, help="corpus root (with train/ subdirectory)")
    t.add_argument("--out", required=True, help="run output directory")
    t.add_argument("--config", default=None)
    t.add_argument("--profile", choices=("default", "desk"), default=None)
    t.add_argument("--steps", type=int, default=None)
    t.add_argument("--total-steps", type=int, default=None, dest="total_steps")
    t.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--mode", choices=("colored", "line", "line_drawing"), default=None)
    t.add_argument("--resolution", type=int, default=None)
    t.add_argument("--strategy", default=None)
    t.add_argument("--ratio", type=float, default=None)
    t.add_argument("--side", default=None)
    t.add_argument("--anchor", default=None)
    t.add_argument("--resume", default=None, help="checkpoint to continue from")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("reconstruct", help="reconstruct one masked PNG")
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--input", required=True)
    r.add_argument("--out", default=".")
    r.add_argument("--config", default=None)
    r.add_argument("--plan", default=None, help="explicit MaskPlan JSON file")
    r.add_argument("--strategy", default=None)
    r.add_argument("--ratio", type=float, default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--side", default=None)
    r.add_argument("--anchor", default=None)
    r.add_argument("--resize", action="store_true", help="nearest-resize input to model size")
    r.set_defaults(func=cmd_reconstruct)

    e = sub.add_parser("evaluate", help="per-strategy metrics over a split")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", default=None)
    e.add_argument("--split", default="test")
    e.add_argument("--out", default=".")
    e.add_argument("--config", default=None)
    e.add_argument("--strategies", default=None, help="comma list of name:ratio")
    e.add_argument("--limit", type=int, default=None)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--side", default=None)
    e.add_argument("--anchor", default=None)
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("serve", help="run the HTTP inference service")
    s.add_argument("--checkpoint", default=None)
    s.add_argument("--config", default=None)
    s.add_argument("--host", default=None)
    s.add_argument("--port", type=int, default=None)
    s.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PlanMaeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
