/** Canvas rendering and pointer handling for the mask grid. */

import type { EditorCore } from "./state.js";

const MASK_FILL = "rgba(220, 60, 60, 0.35)";
const MASK_STROKE = "rgba(220, 60, 60, 0.9)";
const GRID_LINE = "rgba(0, 0, 0, 0.25)";

function dataUrl(b64: string): string {
  return "data:image/png;base64," + b64;
}

export function decodeToImage(b64: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => resolve(img);
    img.onerror = () => reject(new Error("could not decode PNG"));
    img.src = dataUrl(b64);
  });
}

/** Grid editor over the working image: paints cells, draws the overlay. */
export class GridEditor {
  private image: HTMLImageElement | null = null;
  private stroke: { on: boolean; visited: Set<number> } | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private core: EditorCore,
    private onChange: () => void,
  ) {
    canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
    canvas.addEventListener("pointerup", () => this.pointerUp());
    canvas.addEventListener("pointerleave", () => this.pointerUp());
  }

  async setImage(b64: string): Promise<void> {
    this.image = await decodeToImage(b64);
    const scale = Math.max(1, Math.floor(512 / Math.max(this.image.width, this.image.height)));
    this.canvas.width = this.image.width * scale;
    this.canvas.height = this.image.height * scale;
    this.render();
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.imageSmoothingEnabled = false;
    ctx.fillStyle = "#fff";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.image) {
      ctx.drawImage(this.image, 0, 0, this.canvas.width, this.canvas.height);
    }
    const grid = this.core.grid;
    if (!grid) return;
    const cw = this.canvas.width / grid.cols;
    const ch = this.canvas.height / grid.rows;
    ctx.strokeStyle = GRID_LINE;
    ctx.lineWidth = 1;
    for (let c = 1; c < grid.cols; c++) {
      ctx.beginPath();
      ctx.moveTo(c * cw, 0);
      ctx.lineTo(c * cw, this.canvas.height);
      ctx.stroke();
    }
    for (let r = 1; r < grid.rows; r++) {
      ctx.beginPath();
      ctx.moveTo(0, r * ch);
      ctx.lineTo(this.canvas.width, r * ch);
      ctx.stroke();
    }
    ctx.fillStyle = MASK_FILL;
    ctx.strokeStyle = MASK_STROKE;
    for (const idx of this.core.selection) {
      const r = Math.floor(idx / grid.cols);
      const c = idx % grid.cols;
      ctx.fillRect(c * cw, r * ch, cw, ch);
      ctx.strokeRect(c * cw + 0.5, r * ch + 0.5, cw - 1, ch - 1);
    }
  }

  private cellAt(e: PointerEvent): [number, number] | null {
    const grid = this.core.grid;
    if (!grid) return null;
    const rect = this.canvas.getBoundingClientRect();
    const x = ((e.clientX - rect.left) / rect.width) * this.canvas.width;
    const y = ((e.clientY - rect.top) / rect.height) * this.canvas.height;
    const col = Math.floor(x / (this.canvas.width / grid.cols));
    const row = Math.floor(y / (this.canvas.height / grid.rows));
    if (row < 0 || row >= grid.rows || col < 0 || col >= grid.cols) return null;
    return [row, col];
  }

  private pointerDown(e: PointerEvent): void {
    if (this.core.pending) return;
    const cell = this.cellAt(e);
    if (!cell) return;
    const grid = this.core.grid;
    if (!grid) return;
    const idx = cell[0] * grid.cols + cell[1];
    // the first cell decides whether this stroke paints or erases
    const on = !this.core.selection.has(idx);
    this.stroke = { on, visited: new Set([idx]) };
    this.core.setCell(cell[0], cell[1], on);
    this.canvas.setPointerCapture(e.pointerId);
    this.render();
    this.onChange();
  }

  private pointerMove(e: PointerEvent): void {
    if (!this.stroke || this.core.pending) return;
    const cell = this.cellAt(e);
    if (!cell) return;
    const grid = this.core.grid;
    if (!grid) return;
    const idx = cell[0] * grid.cols + cell[1];
    if (this.stroke.visited.has(idx)) return;
    this.stroke.visited.add(idx);
    this.core.setCell(cell[0], cell[1], this.stroke.on);
    this.render();
    this.onChange();
  }

  private pointerUp(): void {
    this.stroke = null;
  }
}

/** Draw a reconstruction, optionally as |reconstruction - original|. */
export async function renderResult(
  canvas: HTMLCanvasElement,
  reconstructionB64: string,
  originalB64: string | null,
  diff: boolean,
): Promise<void> {
  const recon = await decodeToImage(reconstructionB64);
  const scale = Math.max(1, Math.floor(512 / Math.max(recon.width, recon.height)));
  canvas.width = recon.width * scale;
  canvas.height = recon.height * scale;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.imageSmoothingEnabled = false;
  if (!diff || !originalB64) {
    ctx.drawImage(recon, 0, 0, canvas.width, canvas.height);
    return;
  }
  const original = await decodeToImage(originalB64);
  const scratch = document.createElement("canvas");
  scratch.width = recon.width;
  scratch.height = recon.height;
  const sctx = scratch.getContext("2d");
  if (!sctx) return;
  sctx.drawImage(recon, 0, 0);
  const a = sctx.getImageData(0, 0, recon.width, recon.height);
  sctx.clearRect(0, 0, scratch.width, scratch.height);
  sctx.drawImage(original, 0, 0);
  const b = sctx.getImageData(0, 0, recon.width, recon.height);
  for (let i = 0; i < a.data.length; i += 4) {
    a.data[i] = Math.abs(a.data[i] - b.data[i]);
    a.data[i + 1] = Math.abs(a.data[i + 1] - b.data[i + 1]);
    a.data[i + 2] = Math.abs(a.data[i + 2] - b.data[i + 2]);
    a.data[i + 3] = 255;
  }
  sctx.putImageData(a, 0, 0);
  ctx.drawImage(scratch, 0, 0, canvas.width, canvas.height);
}
