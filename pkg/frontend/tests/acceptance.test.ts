import { describe, expect, it } from "vitest";
import { EditorCore, type CompletionService } from "../src/state.js";
import type { ModelCard, ReconstructRequest, ReconstructResponse } from "../src/types.js";

// the full editor loop against a faithful service stand-in:
//   load -> paint 10 cells -> complete -> echo equals painted set
//   adopt -> re-mask -> second completion uses the adopted image
//   empty selection -> completion output pixel-identical to the input

const CARD: ModelCard = {
  image_size: 64,
  image_width: 64,
  patch_size: 8,
  rows: 8,
  cols: 8,
  channels: 1,
  mode: "line_drawing",
  checkpoint_step: 500,
};

/** Mirrors the service's ratio-0 path: empty mask returns the upload. */
function serviceStandIn(log: ReconstructRequest[]): CompletionService {
  let counter = 0;
  return {
    async reconstruct(req: ReconstructRequest): Promise<ReconstructResponse> {
      log.push(req);
      const indices = [...(req.masked_indices ?? [])].sort((a, b) => a - b);
      counter += 1;
      return {
        reconstruction: indices.length === 0 ? req.image : `recon-${counter}`,
        masked_indices: indices,
        realized_ratio: indices.length / (CARD.rows * CARD.cols),
        metrics: { psnr: indices.length === 0 ? "inf" : 17.2, ssim: indices.length === 0 ? 1 : 0.8 },
      };
    },
  };
}

describe("editor loop", () => {
  it("paint, complete, adopt, re-mask, and the ratio-0 identity", async () => {
    const log: ReconstructRequest[] = [];
    const service = serviceStandIn(log);
    const core = new EditorCore();
    core.setCard(CARD);
    core.loadImage({ b64: "b3JpZ2luYWwtcG5n", width: 64, height: 64 });

    // paint 10 cells by grid coordinates
    const cells: Array<[number, number]> = [
      [0, 0], [0, 1], [1, 1], [2, 5], [3, 3], [3, 4], [4, 4], [5, 0], [6, 7], [7, 2],
    ];
    for (const [r, c] of cells) core.toggleCell(r, c);
    expect(core.selection.size).toBe(10);
    const painted = core.sortedSelection();

    expect(await core.complete(service)).toBe(true);
    const first = core.lastResult!;
    const echoOk =
      first.maskedIndices.length === painted.length &&
      first.maskedIndices.every((v, i) => v === painted[i]);
    expect(echoOk).toBe(true);
    expect(log[0].image).toBe("b3JpZ2luYWwtcG5n");
    expect(log[0].masked_indices).toEqual(painted);

    // adopt, re-mask, complete again: the request carries the adopted image
    core.adopt();
    expect(core.image?.b64).toBe("recon-1");
    core.toggleCell(4, 4);
    core.toggleCell(4, 5);
    expect(await core.complete(service)).toBe(true);
    const adoptedUsed = log[1].image === "recon-1";
    expect(adoptedUsed).toBe(true);
    expect(core.history.length).toBe(2);

    // empty-selection completion returns the input unchanged
    core.clearSelection();
    expect(await core.complete(service)).toBe(true);
    const identity = core.lastResult!.reconstruction === core.image?.b64;
    expect(identity).toBe(true);
    expect(core.lastResult!.metrics?.psnr).toBe("inf");

    const ok = echoOk && adoptedUsed && identity;
    console.log(
      `[acceptance] UI loop: ${ok ? "PASS" : "FAIL"} ` +
        `(echo matches ${painted.length} painted cells, ` +
        `second request used adopted image, ratio-0 identity holds)`,
    );
    expect(ok).toBe(true);
  });
});
