"""Procedural floorplan corpus.

The real corpus behind the reconstruction task is not distributable,
so this module generates a stand-in: residential layouts produced by
recursive axis-aligned splitting of a (possibly L-shaped) boundary on
a 64-unit integer lattice, rasterized in colored and line-drawing
modes.  Everything is a pure function of seeds, so two machines given
the same arguments write byte-identical corpora.

Room typing rules (deterministic, geometry only):
  living    the largest room (ties: lowest room index)
  bathroom  smallest remaining room touching the boundary outline
  kitchen   next smallest room touching the boundary outline
  balcony   smallest still-untyped room, if it touches the outline and
            covers less than 12% of the boundary area
  corridor  any untyped room with aspect ratio >= 3
  bedroom   everything else
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from planmae.errors import ConstraintUnsatisfiable, EmptySplit
from planmae.images import MODE_COLORED, MODE_LINE, Raster, load_png, save_png
from planmae.rng import Mix64, mix

UNITS = 64  # layout lattice; pixels = round(units * resolution / UNITS)
L_SHAPE_PROB = 0.3
ROOM_TYPES = ("living", "bedroom", "kitchen", "bathroom", "balcony", "corridor")

PALETTE = {
    "living": "#FFD9A0",
    "bedroom": "#A0C8FF",
    "kitchen": "#FFB3B3",
    "bathroom": "#B3E6CC",
    "balcony": "#E6CCFF",
    "corridor": "#F0F0F0",
    "wall": "#000000",
    "background": "#FFFFFF",
}

TAG_LAYOUT = 0x4C41594F
TAG_IMAGE = 0x53504C49
SPLITS = ("train", "val", "test")


def _hex_rgb(code: str) -> tuple[float, float, float]:
    code = code.lstrip("#")
    return tuple(int(code[i : i + 2], 16) / 255.0 for i in (0, 2, 4))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in lattice units, y grows downward."""

    x: int
    y: int
    w: int
    h: int

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def bottom(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class LayoutSpec:
    """One generated floorplan: boundary, optional notch, typed rooms."""

    seed: int
    boundary: Rect
    notch: Rect | None
    rooms: tuple[tuple[Rect, str], ...]

    @property
    def boundary_area(self) -> int:
        area = self.boundary.area
        return area - self.notch.area if self.notch else area


def _overlap(a0: int, alen: int, b0: int, blen: int) -> bool:
    return min(a0 + alen, b0 + blen) > max(a0, b0)


def _touches_outline(room: Rect, boundary: Rect, notch: Rect | None) -> bool:
    if (
        room.x == boundary.x
        or room.y == boundary.y
        or room.right == boundary.right
        or room.bottom == boundary.bottom
    ):
        return True
    if notch is None:
        return False
    n = notch
    return (
        (room.right == n.x and _overlap(room.y, room.h, n.y, n.h))
        or (room.x == n.right and _overlap(room.y, room.h, n.y, n.h))
        or (room.bottom == n.y and _overlap(room.x, room.w, n.x, n.w))
        or (room.y == n.bottom and _overlap(room.x, room.w, n.x, n.w))
    )


def _bsp(rect: Rect, count: int, rng: Mix64, min_w: int, min_h: int) -> list[Rect] | None:
    """Split rect into `count` rooms respecting minimum sides, or None."""
    if rect.w < min_w or rect.h < min_h:
        return None
    if count == 1:
        return [rect]
    vertical_ok = rect.w >= 2 * min_w
    horizontal_ok = rect.h >= 2 * min_h
    if not vertical_ok and not horizontal_ok:
        return None
    if vertical_ok and horizontal_ok:
        vertical = rect.w >= rect.h  # split the longer dimension
    else:
        vertical = vertical_ok
    if vertical:
        cut = min_w + rng.below(rect.w - 2 * min_w + 1)
        a = Rect(rect.x, rect.y, cut, rect.h)
        b = Rect(rect.x + cut, rect.y, rect.w - cut, rect.h)
        frac = cut / rect.w
    else:
        cut = min_h + rng.below(rect.h - 2 * min_h + 1)
        a = Rect(rect.x, rect.y, rect.w, cut)
        b = Rect(rect.x, rect.y + cut, rect.w, rect.h - cut)
        frac = cut / rect.h
    ca = min(count - 1, max(1, round(count * frac)))
    left = _bsp(a, ca, rng, min_w, min_h)
    if left is None:
        return None
    right = _bsp(b, count - ca, rng, min_w, min_h)
    if right is None:
        return None
    return left + right


def _assign_types(rooms: list[Rect], boundary: Rect, notch: Rect | None) -> list[str]:
    order = sorted(range(len(rooms)), key=lambda i: (-rooms[i].area, i))
    types: dict[int, str] = {order[0]: "living"}
    total = boundary.area - (notch.area if notch else 0)
    edge = [
        i
        for i in sorted(range(len(rooms)), key=lambda i: (rooms[i].area, i))
        if i not in types and _touches_outline(rooms[i], boundary, notch)
    ]
    if edge:
        types[edge[0]] = "bathroom"
    if len(edge) > 1:
        types[edge[1]] = "kitchen"
    rest = sorted((i for i in range(len(rooms)) if i not in types), key=lambda i: (rooms[i].area, i))
    if rest:
        i = rest[0]
        if rooms[i].area < 0.12 * total and _touches_outline(rooms[i], boundary, notch):
            types[i] = "balcony"
    for i in range(len(rooms)):
        if i in types:
            continue
        r = rooms[i]
        types[i] = "corridor" if max(r.w, r.h) >= 3 * min(r.w, r.h) else "bedroom"
    return [types[i] for i in range(len(rooms))]


def gen_layout(seed: int, retries: int = 16) -> LayoutSpec:
    """Generate one layout; identical seeds give identical layouts.

    Each attempt draws a boundary (L-shaped with probability 0.3),
    picks a room count in [3, 8] and runs seeded binary splitting.
    Attempts that cannot satisfy the minimum-side rule are re-seeded
    deterministically; after `retries` failures the seed is rejected.
    """
    for attempt in range(retries):
        rng = Mix64(mix(seed, TAG_LAYOUT, attempt))
        bw = 48 + 2 * rng.below(7)
        bh = 48 + 2 * rng.below(7)
        boundary = Rect((UNITS - bw) // 2, (UNITS - bh) // 2, bw, bh)
        min_w = -(-bw // 8)
        min_h = -(-bh // 8)
        notch = None
        pieces = [boundary]
        if rng.uniform() < L_SHAPE_PROB:
            corner = rng.below(4)  # 0 tl, 1 tr, 2 bl, 3 br
            nw = max(2 * min_w, bw // 4 + rng.below(bw // 4 + 1))
            nh = max(2 * min_h, bh // 4 + rng.below(bh // 4 + 1))
            nw = min(nw, bw - 2 * min_w)
            nh = min(nh, bh - 2 * min_h)
            nx = boundary.x if corner in (0, 2) else boundary.right - nw
            ny = boundary.y if corner in (0, 1) else boundary.bottom - nh
            notch = Rect(nx, ny, nw, nh)
            # decompose the L into a full-height arm and the remaining strip
            if corner in (0, 2):  # notch on the left: right arm is full height
                arm = Rect(boundary.x + nw, boundary.y, bw - nw, bh)
                strip_y = boundary.y + nh if corner == 0 else boundary.y
                pieces = [arm, Rect(boundary.x, strip_y, nw, bh - nh)]
            else:  # notch on the right: left arm is full height
                arm = Rect(boundary.x, boundary.y, bw - nw, bh)
                strip_y = boundary.y + nh if corner == 1 else boundary.y
                pieces = [arm, Rect(boundary.x + bw - nw, strip_y, nw, bh - nh)]
        count = 3 + rng.below(6)
        if len(pieces) == 2:
            total_area = sum(p.area for p in pieces)
            c0 = min(count - 1, max(1, round(count * pieces[0].area / total_area)))
            targets = [c0, count - c0]
        else:
            targets = [count]
        rooms: list[Rect] = []
        ok = True
        for piece, target in zip(pieces, targets):
            part = _bsp(piece, target, rng, min_w, min_h)
            if part is None:
                ok = False
                break
            rooms.extend(part)
        if not ok:
            continue
        kinds = _assign_types(rooms, boundary, notch)
        return LayoutSpec(
            seed=seed, boundary=boundary, notch=notch, rooms=tuple(zip(rooms, kinds))
        )
    raise ConstraintUnsatisfiable(f"no valid layout for seed {seed} in {retries} attempts")


def _px(u: int, resolution: int) -> int:
    return int(np.floor(u * resolution / UNITS + 0.5))


def _paint_border(canvas: np.ndarray, rect: Rect, resolution: int, t: int, color) -> None:
    x0, y0 = _px(rect.x, resolution), _px(rect.y, resolution)
    x1, y1 = _px(rect.right, resolution), _px(rect.bottom, resolution)
    canvas[y0 : min(y0 + t, y1), x0:x1] = color
    canvas[max(y1 - t, y0) : y1, x0:x1] = color
    canvas[y0:y1, x0 : min(x0 + t, x1)] = color
    canvas[y0:y1, max(x1 - t, x0) : x1] = color


def render(layout: LayoutSpec, mode: str, resolution: int) -> Raster:
    """Rasterize a layout.

    Colored mode fills rooms with the palette and draws walls in black,
    thickness max(1, round(resolution/128)); line-drawing mode draws
    walls only on a white single-channel canvas, values exactly {0, 1}.
    """
    if mode not in (MODE_COLORED, MODE_LINE):
        raise ValueError(f"mode must be {MODE_COLORED!r} or {MODE_LINE!r}, got {mode!r}")
    t = max(1, int(np.floor(resolution / 128 + 0.5)))
    channels = 3 if mode == MODE_COLORED else 1
    canvas = np.ones((resolution, resolution, channels), dtype=np.float64)
    if mode == MODE_COLORED:
        for rect, kind in layout.rooms:
            x0, y0 = _px(rect.x, resolution), _px(rect.y, resolution)
            x1, y1 = _px(rect.right, resolution), _px(rect.bottom, resolution)
            canvas[y0:y1, x0:x1] = _hex_rgb(PALETTE[kind])
    wall = 0.0
    for rect, _ in layout.rooms:
        _paint_border(canvas, rect, resolution, t, wall)
    return Raster.from_array(canvas, mode=mode)


@dataclass(frozen=True)
class CorpusManifest:
    root: str
    train: int
    val: int
    test: int
    seed: int
    mode: str
    resolution: int

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "counts": {"train": self.train, "val": self.val, "test": self.test},
            "mode": self.mode,
            "resolution": self.resolution,
            "palette": PALETTE,
        }


def build_corpus(
    out_dir: str,
    counts: tuple[int, int, int] = (7000, 500, 500),
    seed: int = 0,
    mode: str = MODE_COLORED,
    resolution: int = 256,
) -> CorpusManifest:
    """Write a train/val/test corpus of rendered layouts plus manifest.json.

    Per-image seeds mix the master seed with the split index and the
    image index, so splits can never share a layout.
    """
    root = Path(out_dir)
    for split, n in zip(SPLITS, counts):
        sub = root / split
        os.makedirs(sub, exist_ok=True)
        split_idx = SPLITS.index(split)
        for i in range(n):
            layout = gen_layout(mix(seed, TAG_IMAGE, split_idx, i))
            save_png(render(layout, mode, resolution), str(sub / f"{i:06d}.png"))
    manifest = CorpusManifest(
        root=str(root),
        train=counts[0],
        val=counts[1],
        test=counts[2],
        seed=seed,
        mode=mode,
        resolution=resolution,
    )
    with open(root / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest.to_json(), f, indent=2, sort_keys=True)
    return manifest


def load_split(root: str, split: str, mode: str | None = None) -> list[Raster]:
    """Read every PNG of one split, sorted by filename.

    Works for generated corpora and for user-supplied directories that
    follow the same <root>/{train,val,test}/*.png layout.
    """
    sub = Path(root) / split
    files = sorted(sub.glob("*.png"))
    if not files:
        raise EmptySplit(f"no PNG files under {sub}")
    return [load_png(str(p), mode=mode) for p in files]
