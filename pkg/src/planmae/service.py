"""HTTP inference service.

One checkpoint is loaded at startup and never swapped, so concurrent
handlers share immutable model state and identical requests produce
byte-identical responses.  All error bodies are JSON of the form
{"error": <code>, "detail": <text>}.

POST /v1/reconstruct   base64 PNG in, base64 PNG out
GET  /v1/health        readiness probe (503 until the model is loaded)
GET  /v1/model         grid geometry the UI needs to draw overlays
"""

from __future__ import annotations

import base64
import binascii
import math
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from planmae import model as mdl
from planmae.errors import BadRatio, GeometryMismatch, PlanMaeError
from planmae.images import MODE_COLORED, MODE_LINE, decode_png_bytes, encode_png_bytes
from planmae.masking import MaskPlan, plan_for
from planmae.metrics import psnr, ssim

MAX_BODY_BYTES = 8 * 1024 * 1024


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


class _ModelState:
    """Checkpoint holder; populated once by the lifespan hook."""

    def __init__(self, checkpoint_path: str):
        self.checkpoint_path = checkpoint_path
        self.params = None
        self.config: mdl.ModelConfig | None = None
        self.step = 0

    @property
    def loaded(self) -> bool:
        return self.params is not None

    def load(self) -> None:
        params, config, step, _, _ = mdl.load_checkpoint(self.checkpoint_path)
        self.params = params
        self.config = config
        self.step = step


def create_app(
    checkpoint_path: str,
    cors_origin: str = "*",
    max_body_bytes: int = MAX_BODY_BYTES,
) -> FastAPI:
    state = _ModelState(checkpoint_path)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        state.load()
        yield

    app = FastAPI(title="planmae", lifespan=lifespan)
    app.state.model_state = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(Exception)
    async def on_internal(request: Request, exc: Exception):
        return _error(500, "internal", str(exc))

    @app.get("/v1/health")
    async def health():
        if not state.loaded:
            return _error(503, "not_ready", "checkpoint not loaded yet")
        return {"status": "ok", "model_loaded": True}

    @app.get("/v1/model")
    async def model_card():
        if not state.loaded:
            return _error(503, "not_ready", "checkpoint not loaded yet")
        cfg = state.config
        return {
            "image_size": cfg.image_height,
            "image_width": cfg.image_width,
            "patch_size": cfg.patch_size,
            "rows": cfg.grid.rows,
            "cols": cfg.grid.cols,
            "channels": cfg.channels,
            "mode": MODE_LINE if cfg.channels == 1 else MODE_COLORED,
            "checkpoint_step": state.step,
        }

    @app.post("/v1/reconstruct")
    async def reconstruct(request: Request):
        if not state.loaded:
            return _error(503, "not_ready", "checkpoint not loaded yet")
        length = request.headers.get("content-length")
        if length is not None and length.isdigit() and int(length) > max_body_bytes:
            return _error(413, "too_large", f"body exceeds {max_body_bytes} bytes")
        body = await request.body()
        if len(body) > max_body_bytes:
            return _error(413, "too_large", f"body exceeds {max_body_bytes} bytes")
        import json as _json

        try:
            doc = _json.loads(body)
        except (UnicodeDecodeError, _json.JSONDecodeError):
            return _error(400, "bad_request", "body is not valid JSON")
        if not isinstance(doc, dict):
            return _error(400, "bad_request", "body must be a JSON object")

        cfg = state.config
        image_b64 = doc.get("image")
        if not isinstance(image_b64, str):
            return _error(400, "bad_image", "missing base64 image field")
        try:
            png = base64.b64decode(image_b64, validate=True)
            image = decode_png_bytes(png, mode=MODE_LINE if cfg.channels == 1 else None)
        except (binascii.Error, PlanMaeError, ValueError, OSError) as exc:
            return _error(400, "bad_image", f"could not decode image: {exc}")
        if (image.height, image.width) != (cfg.image_height, cfg.image_width):
            return _error(
                400,
                "bad_geometry",
                f"image is {image.height}x{image.width}, model expects "
                f"{cfg.image_height}x{cfg.image_width}",
            )
        if image.channels != cfg.channels:
            return _error(
                400,
                "bad_geometry",
                f"image has {image.channels} channel(s), model expects {cfg.channels}",
            )

        has_strategy = doc.get("strategy") is not None
        has_indices = doc.get("masked_indices") is not None
        if has_strategy == has_indices:
            return _error(
                400, "bad_request", "provide exactly one of strategy or masked_indices"
            )
        try:
            if has_indices:
                indices = doc["masked_indices"]
                if not isinstance(indices, list) or not all(
                    isinstance(i, int) and not isinstance(i, bool) for i in indices
                ):
                    return _error(400, "bad_mask", "masked_indices must be an integer list")
                plan = MaskPlan.from_indices(cfg.grid, indices)
            else:
                plan = plan_for(
                    cfg.grid,
                    str(doc["strategy"]),
                    float(doc.get("ratio", 0.75)),
                    seed=int(doc.get("seed", 0)),
                    side=str(doc.get("side", "left")),
                    anchor=str(doc.get("anchor", "tl")),
                )
        except (GeometryMismatch, BadRatio) as exc:
            return _error(400, "bad_mask", str(exc))
        except (ValueError, TypeError) as exc:
            return _error(400, "bad_request", str(exc))

        recon = mdl.reconstruct(state.params, cfg, image, plan)
        payload = {
            "reconstruction": base64.b64encode(encode_png_bytes(recon)).decode("ascii"),
            "masked_indices": list(plan.masked),
            "realized_ratio": plan.realized_ratio,
            "metrics": None,
        }
        if doc.get("return_metrics"):
            p = psnr(image, recon)
            payload["metrics"] = {
                "psnr": "inf" if math.isinf(p) else p,
                "ssim": ssim(image, recon),
            }
        return JSONResponse(content=payload)

    return app
