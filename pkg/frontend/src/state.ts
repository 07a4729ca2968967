/** Editor core: selection, history, and the completion loop.
 *
 * DOM-free on purpose; the canvas layer and the page wiring sit on top.
 * Two invariants are enforced here rather than in the view:
 *   - the masked set sent to the server is exactly the rendered
 *     selection, checked by comparing the echoed masked_indices;
 *   - nothing mutates the working image except adopt() and loadImage().
 */

import type { Metrics, ModelCard, ReconstructRequest, ReconstructResponse } from "./types.js";
import { presetIndices, type PresetOptions, type Strategy } from "./presets.js";

export interface WorkingImage {
  b64: string; // base64 PNG at model geometry
  width: number;
  height: number;
}

export interface HistoryEntry {
  maskedIndices: number[];
  reconstruction: string;
  realizedRatio: number;
  metrics: Metrics | null;
}

/** The one service call the core needs; the HTTP client satisfies it. */
export interface CompletionService {
  reconstruct(req: ReconstructRequest): Promise<ReconstructResponse>;
}

export class EditorCore {
  card: ModelCard | null = null;
  image: WorkingImage | null = null;
  selection = new Set<number>();
  history: HistoryEntry[] = [];
  pending = false;
  lastError: string | null = null;
  private adoptStack: WorkingImage[] = [];

  setCard(card: ModelCard): void {
    this.card = card;
  }

  get grid(): { rows: number; cols: number } | null {
    return this.card ? { rows: this.card.rows, cols: this.card.cols } : null;
  }

  loadImage(image: WorkingImage): void {
    this.image = image;
    this.selection.clear();
    this.adoptStack = [];
    this.lastError = null;
  }

  /** Toggle one grid cell; out-of-grid coordinates are ignored. */
  toggleCell(row: number, col: number): void {
    const grid = this.grid;
    if (!grid || !this.image) return;
    if (row < 0 || row >= grid.rows || col < 0 || col >= grid.cols) return;
    const idx = row * grid.cols + col;
    if (this.selection.has(idx)) this.selection.delete(idx);
    else this.selection.add(idx);
  }

  /** Drag painting: force a cell to a given state instead of toggling. */
  setCell(row: number, col: number, on: boolean): void {
    const grid = this.grid;
    if (!grid || !this.image) return;
    if (row < 0 || row >= grid.rows || col < 0 || col >= grid.cols) return;
    const idx = row * grid.cols + col;
    if (on) this.selection.add(idx);
    else this.selection.delete(idx);
  }

  applyPreset(strategy: Strategy, ratio: number, options: PresetOptions = {}): void {
    const grid = this.grid;
    if (!grid) return;
    this.selection = new Set(presetIndices(grid, strategy, ratio, options));
  }

  clearSelection(): void {
    this.selection.clear();
  }

  sortedSelection(): number[] {
    return [...this.selection].sort((a, b) => a - b);
  }

  canComplete(): boolean {
    return this.image !== null && this.card !== null && !this.pending;
  }

  /** Send the painted selection as explicit indices; append to history. */
  async complete(service: CompletionService): Promise<boolean> {
    if (!this.canComplete() || !this.image) return false;
    const sent = this.sortedSelection();
    this.pending = true;
    this.lastError = null;
    try {
      const response = await service.reconstruct({
        image: this.image.b64,
        masked_indices: sent,
        return_metrics: true,
      });
      const echoed = [...response.masked_indices].sort((a, b) => a - b);
      if (echoed.length !== sent.length || echoed.some((v, i) => v !== sent[i])) {
        this.lastError = "server masked a different cell set than was painted";
        return false;
      }
      this.history.push({
        maskedIndices: sent,
        reconstruction: response.reconstruction,
        realizedRatio: response.realized_ratio,
        metrics: response.metrics,
      });
      return true;
    } catch (err) {
      // state (image, selection, history) is preserved on failure
      this.lastError = err instanceof Error ? err.message : String(err);
      return false;
    } finally {
      this.pending = false;
    }
  }

  get lastResult(): HistoryEntry | null {
    return this.history.length ? this.history[this.history.length - 1] : null;
  }

  canAdopt(): boolean {
    return this.lastResult !== null && this.image !== null;
  }

  /** Make the last reconstruction the working image; selection resets. */
  adopt(): void {
    const last = this.lastResult;
    if (!last || !this.image) return;
    this.adoptStack.push(this.image);
    this.image = { b64: last.reconstruction, width: this.image.width, height: this.image.height };
    this.selection.clear();
  }

  canUndoAdopt(): boolean {
    return this.adoptStack.length > 0;
  }

  /** Restore the working image from before the most recent adopt. */
  undoAdopt(): void {
    const prior = this.adoptStack.pop();
    if (prior) {
      this.image = prior;
      this.selection.clear();
    }
  }
}
