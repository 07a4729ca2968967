/** Page wiring: controls, service discovery, and the completion loop. */

import { ServiceClient } from "./api.js";
import { GridEditor, decodeToImage, renderResult } from "./editor.js";
import { EditorCore } from "./state.js";
import type { Anchor, Side, Strategy } from "./presets.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const serviceUrl =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8631";
const client = new ServiceClient(serviceUrl);
const core = new EditorCore();

const banner = el<HTMLDivElement>("banner");
const status = el<HTMLDivElement>("status");
const fileInput = el<HTMLInputElement>("file");
const strategySel = el<HTMLSelectElement>("strategy");
const ratioInput = el<HTMLInputElement>("ratio");
const seedInput = el<HTMLInputElement>("seed");
const sideSel = el<HTMLSelectElement>("side");
const anchorSel = el<HTMLSelectElement>("anchor");
const presetBtn = el<HTMLButtonElement>("preset");
const clearBtn = el<HTMLButtonElement>("clear");
const completeBtn = el<HTMLButtonElement>("complete");
const adoptBtn = el<HTMLButtonElement>("adopt");
const undoBtn = el<HTMLButtonElement>("undo");
const diffToggle = el<HTMLInputElement>("diff");
const editorCanvas = el<HTMLCanvasElement>("editor");
const resultCanvas = el<HTMLCanvasElement>("result");

const editor = new GridEditor(editorCanvas, core, refreshControls);

function showError(message: string | null): void {
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

function refreshControls(): void {
  const cells = core.selection.size;
  const grid = core.grid;
  const total = grid ? grid.rows * grid.cols : 0;
  const parts: string[] = [];
  if (core.card) {
    parts.push(
      `model ${core.card.image_size}x${core.card.image_width}px, ` +
        `${core.card.rows}x${core.card.cols} grid, step ${core.card.checkpoint_step}`,
    );
  }
  if (total) parts.push(`selected ${cells}/${total} (${((cells / total) * 100).toFixed(1)}%)`);
  const last = core.lastResult;
  if (last) {
    const m = last.metrics;
    const psnr = m ? (m.psnr === "inf" ? "inf" : (m.psnr as number).toFixed(2)) : "-";
    const ssim = m ? m.ssim.toFixed(4) : "-";
    parts.push(`last: ratio ${last.realizedRatio.toFixed(3)}, psnr ${psnr}, ssim ${ssim}`);
  }
  status.textContent = parts.join(" | ");
  completeBtn.disabled = !core.canComplete();
  adoptBtn.disabled = !core.canAdopt() || core.pending;
  undoBtn.disabled = !core.canUndoAdopt() || core.pending;
  presetBtn.disabled = !core.image || core.pending;
  clearBtn.disabled = !core.image || core.pending;
  const s = strategySel.value as Strategy;
  sideSel.disabled = s !== "one_sided";
  anchorSel.disabled = s !== "corner";
  seedInput.disabled = s !== "random";
}

async function loadCard(): Promise<void> {
  try {
    core.setCard(await client.modelCard());
    showError(null);
  } catch (err) {
    showError(`service at ${serviceUrl} not reachable: ${(err as Error).message}`);
  }
  refreshControls();
}

function bytesToB64(bytes: Uint8Array): string {
  let bin = "";
  for (const b of bytes) bin += String.fromCharCode(b);
  return btoa(bin);
}

async function onFile(): Promise<void> {
  const file = fileInput.files?.[0];
  if (!file || !core.card) return;
  let b64 = bytesToB64(new Uint8Array(await file.arrayBuffer()));
  let img = await decodeToImage(b64);
  const want = { w: core.card.image_width, h: core.card.image_size };
  if (img.width !== want.w || img.height !== want.h) {
    // nearest-neighbor resize to model geometry, with a warning
    const scratch = document.createElement("canvas");
    scratch.width = want.w;
    scratch.height = want.h;
    const ctx = scratch.getContext("2d");
    if (!ctx) return;
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(img, 0, 0, want.w, want.h);
    b64 = scratch.toDataURL("image/png").split(",")[1];
    img = await decodeToImage(b64);
    showError(`input was ${img.width}x${img.height}; resized to ${want.w}x${want.h}`);
  } else {
    showError(null);
  }
  core.loadImage({ b64, width: img.width, height: img.height });
  await editor.setImage(b64);
  resultCanvas.getContext("2d")?.clearRect(0, 0, resultCanvas.width, resultCanvas.height);
  refreshControls();
}

async function onComplete(): Promise<void> {
  refreshControls();
  const before = core.image?.b64 ?? null;
  const ok = await core.complete(client);
  showError(ok ? null : core.lastError);
  const last = core.lastResult;
  if (ok && last) {
    await renderResult(resultCanvas, last.reconstruction, before, diffToggle.checked);
  }
  refreshControls();
}

async function onAdopt(): Promise<void> {
  core.adopt();
  if (core.image) await editor.setImage(core.image.b64);
  refreshControls();
}

async function onUndo(): Promise<void> {
  core.undoAdopt();
  if (core.image) await editor.setImage(core.image.b64);
  refreshControls();
}

fileInput.addEventListener("change", () => void onFile());
presetBtn.addEventListener("click", () => {
  core.applyPreset(strategySel.value as Strategy, Number(ratioInput.value), {
    seed: Number(seedInput.value) || 0,
    side: sideSel.value as Side,
    anchor: anchorSel.value as Anchor,
  });
  editor.render();
  refreshControls();
});
clearBtn.addEventListener("click", () => {
  core.clearSelection();
  editor.render();
  refreshControls();
});
completeBtn.addEventListener("click", () => void onComplete());
adoptBtn.addEventListener("click", () => void onAdopt());
undoBtn.addEventListener("click", () => void onUndo());
strategySel.addEventListener("change", refreshControls);
diffToggle.addEventListener("change", () => {
  const last = core.lastResult;
  if (last) {
    void renderResult(resultCanvas, last.reconstruction, core.image?.b64 ?? null, diffToggle.checked);
  }
});

void loadCard();
refreshControls();
