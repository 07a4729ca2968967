"""Deterministic mask plans for the five masking strategies.

Every planner returns the exact masked-patch count half_up(ratio * N)
and is a pure function of its arguments.  Random plans draw from the
documented SplitMix64 scheme in planmae.rng, so identical seeds give
identical plans on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from planmae.errors import BadRatio, GeometryMismatch
from planmae.images import PatchGrid
from planmae.rng import Mix64

STRATEGIES = ("random", "center", "perimeter", "one_sided", "corner")
SIDES = ("left", "right", "top", "bottom")
ANCHORS = ("tl", "tr", "bl", "br")


def half_up(x: float) -> int:
    """Round half away from zero for non-negative x (0.5 -> 1)."""
    return int(math.floor(x + 0.5))


def _target_count(grid: PatchGrid, ratio: float) -> int:
    if not 0.0 <= ratio <= 1.0:
        raise BadRatio(f"masking ratio {ratio} outside [0, 1]")
    return half_up(ratio * grid.num_patches)


@dataclass(frozen=True)
class MaskPlan:
    """A strategy tag plus the exact ordered set of masked patch indices."""

    strategy: str
    ratio: float
    seed: int
    grid: PatchGrid
    masked: tuple[int, ...]
    side: str | None = None
    anchor: str | None = None
    _visible: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.grid.num_patches
        prev = -1
        for i in self.masked:
            if not 0 <= i < n:
                raise GeometryMismatch(f"masked index {i} outside [0, {n})")
            if i <= prev:
                raise GeometryMismatch("masked indices must be strictly ascending")
            prev = i
        masked_set = set(self.masked)
        object.__setattr__(
            self, "_visible", tuple(i for i in range(n) if i not in masked_set)
        )

    @property
    def visible(self) -> tuple[int, ...]:
        return self._visible

    @property
    def num_masked(self) -> int:
        return len(self.masked)

    @property
    def realized_ratio(self) -> float:
        return len(self.masked) / self.grid.num_patches

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "ratio": self.ratio,
            "seed": self.seed,
            "side": self.side,
            "anchor": self.anchor,
            "grid": {
                "rows": self.grid.rows,
                "cols": self.grid.cols,
                "patch_size": self.grid.patch_size,
            },
            "masked": list(self.masked),
        }

    @staticmethod
    def from_json(doc: dict) -> "MaskPlan":
        g = doc["grid"]
        grid = PatchGrid(patch_size=g["patch_size"], rows=g["rows"], cols=g["cols"])
        return MaskPlan(
            strategy=doc["strategy"],
            ratio=doc["ratio"],
            seed=doc.get("seed") or 0,
            grid=grid,
            masked=tuple(sorted(doc["masked"])),
            side=doc.get("side"),
            anchor=doc.get("anchor"),
        )

    @staticmethod
    def from_indices(grid: PatchGrid, indices) -> "MaskPlan":
        """Explicit plan from a raw index collection (deduplicated, sorted)."""
        masked = tuple(sorted(set(int(i) for i in indices)))
        n = grid.num_patches
        for i in masked:
            if not 0 <= i < n:
                raise GeometryMismatch(f"masked index {i} outside [0, {n})")
        ratio = len(masked) / n if n else 0.0
        return MaskPlan(strategy="explicit", ratio=ratio, seed=0, grid=grid, masked=masked)


def plan_random(grid: PatchGrid, ratio: float, seed: int) -> MaskPlan:
    """Mask half_up(ratio*N) patches drawn uniformly without replacement.

    Sampling is a partial Fisher-Yates shuffle of range(N) driven by the
    SplitMix64 stream seeded with `seed`, which fixes the result across
    platforms and reimplementations.
    """
    k = _target_count(grid, ratio)
    picks = Mix64(seed).sample_without_replacement(grid.num_patches, k)
    return MaskPlan(
        strategy="random", ratio=ratio, seed=seed, grid=grid, masked=tuple(sorted(picks))
    )


def _center_shells(grid: PatchGrid) -> list[list[int]]:
    """Grid indices grouped by concentric shell around the center cell(s).

    Shell 0 is the center block (1, 2 or 4 cells depending on parity);
    shell d is the rectangular ring at Chebyshev distance d from it.
    Cells within each shell are in row-major order.
    """

    def span(n: int) -> tuple[int, int]:
        return ((n - 1) // 2, n // 2)

    rlo, rhi = span(grid.rows)
    clo, chi = span(grid.cols)
    shells: dict[int, list[int]] = {}
    for idx in range(grid.num_patches):
        r, c = grid.cell(idx)
        dr = max(0, rlo - r, r - rhi)
        dc = max(0, clo - c, c - chi)
        shells.setdefault(max(dr, dc), []).append(idx)
    return [shells[d] for d in sorted(shells)]


def plan_center(grid: PatchGrid, ratio: float) -> MaskPlan:
    """Mask a block grown outward from the grid center in square shells.

    Complete shells are taken from the inside out; the final partial
    shell fills in row-major order.  One exception keeps the region
    4-connected: when exactly one cell of a new shell is needed and the
    row-major first cell (the ring's top-left corner) only touches the
    region diagonally, the next cell of the ring is taken instead.
    """
    k = _target_count(grid, ratio)
    masked: list[int] = []
    region: set[int] = set()
    for shell in _center_shells(grid):
        if len(masked) >= k:
            break
        take = min(len(shell), k - len(masked))
        if take == len(shell):
            masked.extend(shell)
            region.update(shell)
            continue
        prefix = shell[:take]
        if take == 1 and region and not _touches(grid, shell[0], region):
            prefix = [shell[1]]
        masked.extend(prefix)
        region.update(prefix)
    return MaskPlan(
        strategy="center", ratio=ratio, seed=0, grid=grid, masked=tuple(sorted(masked))
    )


def _touches(grid: PatchGrid, idx: int, region: set[int]) -> bool:
    r, c = grid.cell(idx)
    for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
        if 0 <= rr < grid.rows and 0 <= cc < grid.cols and rr * grid.cols + cc in region:
            return True
    return False


def _rings(grid: PatchGrid) -> list[list[int]]:
    """Indices grouped by rectangular ring from the boundary inward."""
    rings: dict[int, list[int]] = {}
    for idx in range(grid.num_patches):
        r, c = grid.cell(idx)
        d = min(r, c, grid.rows - 1 - r, grid.cols - 1 - c)
        rings.setdefault(d, []).append(idx)
    return [rings[d] for d in sorted(rings)]


def plan_perimeter(grid: PatchGrid, ratio: float) -> MaskPlan:
    """Mask complete outer rings inward, then part of the next ring.

    Whole rings are added while the running count stays within the
    target; the first ring that does not fit is filled in row-major
    order up to the exact count.
    """
    k = _target_count(grid, ratio)
    masked: list[int] = []
    for ring in _rings(grid):
        if len(masked) >= k:
            break
        take = min(len(ring), k - len(masked))
        masked.extend(ring[:take])
    return MaskPlan(
        strategy="perimeter", ratio=ratio, seed=0, grid=grid, masked=tuple(sorted(masked))
    )


def plan_one_sided(grid: PatchGrid, ratio: float, side: str) -> MaskPlan:
    """Mask full columns (or rows) from one side, then part of the next.

    The partial column/row fills in ascending patch-index order, so the
    masked cells always form a contiguous band touching the side.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    k = _target_count(grid, ratio)
    if side in ("left", "right"):
        lanes = list(range(grid.cols))
        if side == "right":
            lanes.reverse()
        groups = [[r * grid.cols + c for r in range(grid.rows)] for c in lanes]
    else:
        lanes = list(range(grid.rows))
        if side == "bottom":
            lanes.reverse()
        groups = [[r * grid.cols + c for c in range(grid.cols)] for r in lanes]
    masked: list[int] = []
    for group in groups:
        if len(masked) >= k:
            break
        take = min(len(group), k - len(masked))
        masked.extend(group[:take])  # groups are already index-ascending
    return MaskPlan(
        strategy="one_sided",
        ratio=ratio,
        seed=0,
        grid=grid,
        masked=tuple(sorted(masked)),
        side=side,
    )


def plan_corner(grid: PatchGrid, ratio: float, anchor: str) -> MaskPlan:
    """Keep a square block visible at one corner and mask the rest.

    The visible block has side half_up(sqrt(1-ratio) * min(rows, cols)).
    Cells outside it are masked in order of decreasing Chebyshev
    distance from the anchor corner (ties row-major); if the target
    exceeds those candidates, block cells are converted in the same
    order, i.e. from the block's outer edge back toward the anchor.
    """
    if anchor not in ANCHORS:
        raise ValueError(f"anchor must be one of {ANCHORS}, got {anchor!r}")
    k = _target_count(grid, ratio)
    side = half_up(math.sqrt(max(0.0, 1.0 - ratio)) * min(grid.rows, grid.cols))
    ar = 0 if anchor in ("tl", "tr") else grid.rows - 1
    ac = 0 if anchor in ("tl", "bl") else grid.cols - 1
    if anchor == "tl":
        in_block = lambda r, c: r < side and c < side
    elif anchor == "tr":
        in_block = lambda r, c: r < side and c >= grid.cols - side
    elif anchor == "bl":
        in_block = lambda r, c: r >= grid.rows - side and c < side
    else:
        in_block = lambda r, c: r >= grid.rows - side and c >= grid.cols - side

    outside: list[tuple[int, int]] = []
    inside: list[tuple[int, int]] = []
    for idx in range(grid.num_patches):
        r, c = grid.cell(idx)
        dist = max(abs(r - ar), abs(c - ac))
        (inside if in_block(r, c) else outside).append((-dist, idx))
    outside.sort()
    inside.sort()
    ordered = [idx for _, idx in outside] + [idx for _, idx in inside]
    return MaskPlan(
        strategy="corner",
        ratio=ratio,
        seed=0,
        grid=grid,
        masked=tuple(sorted(ordered[:k])),
        anchor=anchor,
    )


def gray_out(image, plan: MaskPlan, value: float = 0.5):
    """Copy of the image with every masked patch painted mid-gray.

    This is the "what the model sees" visualization; the encoder itself
    never consumes these gray pixels, it simply skips masked patches.
    """
    from planmae.images import Raster

    p = plan.grid.patch_size
    if (plan.grid.rows * p, plan.grid.cols * p) != (image.height, image.width):
        raise GeometryMismatch(
            f"plan covers {plan.grid.rows * p}x{plan.grid.cols * p}, "
            f"image is {image.height}x{image.width}"
        )
    data = image.data.copy()
    for idx in plan.masked:
        r, c = plan.grid.cell(idx)
        data[r * p : (r + 1) * p, c * p : (c + 1) * p, :] = value
    return Raster.from_array(data, mode=image.mode)


def plan_for(
    grid: PatchGrid,
    strategy: str,
    ratio: float,
    seed: int = 0,
    side: str = "left",
    anchor: str = "tl",
) -> MaskPlan:
    """Dispatch to the planner named by `strategy`."""
    if strategy == "random":
        return plan_random(grid, ratio, seed)
    if strategy == "center":
        return plan_center(grid, ratio)
    if strategy == "perimeter":
        return plan_perimeter(grid, ratio)
    if strategy == "one_sided":
        return plan_one_sided(grid, ratio, side)
    if strategy == "corner":
        return plan_corner(grid, ratio, anchor)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
