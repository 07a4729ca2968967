/** Client-side strategy geometry, mirroring the server's planners.
 *
 * Presets only populate the selection for preview; the editor always
 * sends explicit masked indices, so the server never re-derives these.
 * Still, the rules here are kept identical to the server's (same
 * rounding, same tie-breaks, same RNG) so a preset preview matches what
 * a strategy request would have produced.
 */

import { Mix64 } from "./rng.js";

export interface Grid {
  rows: number;
  cols: number;
}

export const STRATEGIES = ["random", "center", "perimeter", "one_sided", "corner"] as const;
export type Strategy = (typeof STRATEGIES)[number];
export type Side = "left" | "right" | "top" | "bottom";
export type Anchor = "tl" | "tr" | "bl" | "br";

/** Round half away from zero for non-negative x (0.5 -> 1). */
export function halfUp(x: number): number {
  return Math.floor(x + 0.5);
}

function targetCount(grid: Grid, ratio: number): number {
  if (!(ratio >= 0 && ratio <= 1)) {
    throw new RangeError(`masking ratio ${ratio} outside [0, 1]`);
  }
  return halfUp(ratio * grid.rows * grid.cols);
}

function cell(grid: Grid, idx: number): [number, number] {
  return [Math.floor(idx / grid.cols), idx % grid.cols];
}

function planRandom(grid: Grid, ratio: number, seed: number): number[] {
  const k = targetCount(grid, ratio);
  const picks = new Mix64(seed).sampleWithoutReplacement(grid.rows * grid.cols, k);
  return picks.sort((a, b) => a - b);
}

/** Indices grouped by concentric shell around the center cell(s). */
function centerShells(grid: Grid): number[][] {
  const span = (n: number): [number, number] => [Math.floor((n - 1) / 2), Math.floor(n / 2)];
  const [rlo, rhi] = span(grid.rows);
  const [clo, chi] = span(grid.cols);
  const shells: number[][] = [];
  for (let idx = 0; idx < grid.rows * grid.cols; idx++) {
    const [r, c] = cell(grid, idx);
    const dr = Math.max(0, rlo - r, r - rhi);
    const dc = Math.max(0, clo - c, c - chi);
    const d = Math.max(dr, dc);
    (shells[d] ??= []).push(idx);
  }
  return shells;
}

function touches(grid: Grid, idx: number, region: Set<number>): boolean {
  const [r, c] = cell(grid, idx);
  for (const [rr, cc] of [
    [r - 1, c],
    [r + 1, c],
    [r, c - 1],
    [r, c + 1],
  ]) {
    if (rr >= 0 && rr < grid.rows && cc >= 0 && cc < grid.cols) {
      if (region.has(rr * grid.cols + cc)) return true;
    }
  }
  return false;
}

function planCenter(grid: Grid, ratio: number): number[] {
  const k = targetCount(grid, ratio);
  const masked: number[] = [];
  const region = new Set<number>();
  for (const shell of centerShells(grid)) {
    if (masked.length >= k) break;
    const take = Math.min(shell.length, k - masked.length);
    let prefix = shell.slice(0, take);
    // keep the region 4-connected when a lone cell of a partial shell
    // only touches diagonally (the ring's top-left corner case)
    if (take === 1 && take < shell.length && region.size > 0 && !touches(grid, shell[0], region)) {
      prefix = [shell[1]];
    }
    for (const i of prefix) {
      masked.push(i);
      region.add(i);
    }
  }
  return masked.sort((a, b) => a - b);
}

/** Indices grouped by rectangular ring from the boundary inward. */
function rings(grid: Grid): number[][] {
  const out: number[][] = [];
  for (let idx = 0; idx < grid.rows * grid.cols; idx++) {
    const [r, c] = cell(grid, idx);
    const d = Math.min(r, c, grid.rows - 1 - r, grid.cols - 1 - c);
    (out[d] ??= []).push(idx);
  }
  return out;
}

function planPerimeter(grid: Grid, ratio: number): number[] {
  const k = targetCount(grid, ratio);
  const masked: number[] = [];
  for (const ring of rings(grid)) {
    if (masked.length >= k) break;
    masked.push(...ring.slice(0, k - masked.length));
  }
  return masked.sort((a, b) => a - b);
}

function planOneSided(grid: Grid, ratio: number, side: Side): number[] {
  const k = targetCount(grid, ratio);
  let groups: number[][];
  if (side === "left" || side === "right") {
    const lanes = Array.from({ length: grid.cols }, (_, c) => c);
    if (side === "right") lanes.reverse();
    groups = lanes.map((c) => Array.from({ length: grid.rows }, (_, r) => r * grid.cols + c));
  } else {
    const lanes = Array.from({ length: grid.rows }, (_, r) => r);
    if (side === "bottom") lanes.reverse();
    groups = lanes.map((r) => Array.from({ length: grid.cols }, (_, c) => r * grid.cols + c));
  }
  const masked: number[] = [];
  for (const group of groups) {
    if (masked.length >= k) break;
    masked.push(...group.slice(0, k - masked.length));
  }
  return masked.sort((a, b) => a - b);
}

function planCorner(grid: Grid, ratio: number, anchor: Anchor): number[] {
  const k = targetCount(grid, ratio);
  const side = halfUp(Math.sqrt(Math.max(0, 1 - ratio)) * Math.min(grid.rows, grid.cols));
  const ar = anchor === "tl" || anchor === "tr" ? 0 : grid.rows - 1;
  const ac = anchor === "tl" || anchor === "bl" ? 0 : grid.cols - 1;
  const inBlock = (r: number, c: number): boolean => {
    switch (anchor) {
      case "tl":
        return r < side && c < side;
      case "tr":
        return r < side && c >= grid.cols - side;
      case "bl":
        return r >= grid.rows - side && c < side;
      case "br":
        return r >= grid.rows - side && c >= grid.cols - side;
    }
  };
  const outside: Array<[number, number]> = [];
  const inside: Array<[number, number]> = [];
  for (let idx = 0; idx < grid.rows * grid.cols; idx++) {
    const [r, c] = cell(grid, idx);
    const dist = Math.max(Math.abs(r - ar), Math.abs(c - ac));
    (inBlock(r, c) ? inside : outside).push([-dist, idx]);
  }
  const byKey = (a: [number, number], b: [number, number]) => a[0] - b[0] || a[1] - b[1];
  outside.sort(byKey);
  inside.sort(byKey);
  const ordered = [...outside.map(([, i]) => i), ...inside.map(([, i]) => i)];
  return ordered.slice(0, k).sort((a, b) => a - b);
}

export interface PresetOptions {
  seed?: number;
  side?: Side;
  anchor?: Anchor;
}

/** Ascending masked indices for a strategy preset on the given grid. */
export function presetIndices(
  grid: Grid,
  strategy: Strategy,
  ratio: number,
  options: PresetOptions = {},
): number[] {
  const { seed = 0, side = "left", anchor = "tl" } = options;
  switch (strategy) {
    case "random":
      return planRandom(grid, ratio, seed);
    case "center":
      return planCenter(grid, ratio);
    case "perimeter":
      return planPerimeter(grid, ratio);
    case "one_sided":
      return planOneSided(grid, ratio, side);
    case "corner":
      return planCorner(grid, ratio, anchor);
  }
}
