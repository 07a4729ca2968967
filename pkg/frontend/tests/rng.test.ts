import { describe, expect, it } from "vitest";
import { Mix64, mix } from "../src/rng.js";

// published SplitMix64 outputs for seed 0, and values frozen from the
// server-side implementation so both languages provably share a stream
describe("Mix64", () => {
  it("matches the published seed-0 reference vector", () => {
    const m = new Mix64(0);
    expect(m.nextU64()).toBe(0xe220a8397b1dcdafn);
    expect(m.nextU64()).toBe(0x6e789e6aa1b965f4n);
    expect(m.nextU64()).toBe(0x06c45d188009454fn);
  });

  it("matches the server stream for seed 42", () => {
    const m = new Mix64(42);
    expect(m.nextU64()).toBe(0xbdd732262feb6e95n);
    expect(m.nextU64()).toBe(0x28efe333b266f103n);
    expect(m.nextU64()).toBe(0x47526757130f9f52n);
  });

  it("below() stays in range and is deterministic", () => {
    const a = new Mix64(9);
    const b = new Mix64(9);
    for (let i = 0; i < 200; i++) {
      const v = a.below(13);
      expect(v).toBe(b.below(13));
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThan(13);
    }
    expect(() => new Mix64(0).below(0)).toThrow(RangeError);
  });

  it("sampleWithoutReplacement matches the server", () => {
    expect(new Mix64(9).sampleWithoutReplacement(16, 5)).toEqual([10, 12, 5, 13, 7]);
    expect(new Mix64(7).sampleWithoutReplacement(10, 10)).toEqual([3, 1, 9, 7, 6, 4, 0, 5, 8, 2]);
  });

  it("sampleWithoutReplacement validates bounds and never repeats", () => {
    const picks = new Mix64(3).sampleWithoutReplacement(40, 25);
    expect(new Set(picks).size).toBe(25);
    for (const p of picks) {
      expect(p).toBeGreaterThanOrEqual(0);
      expect(p).toBeLessThan(40);
    }
    expect(() => new Mix64(0).sampleWithoutReplacement(5, 6)).toThrow(RangeError);
    expect(() => new Mix64(0).sampleWithoutReplacement(5, -1)).toThrow(RangeError);
  });
});

describe("mix", () => {
  it("matches the server's word folding", () => {
    expect(mix(0)).toBe(0xe220a8397b1dcdafn);
    expect(mix(1, 2, 3)).toBe(0x6ae515c1c0ac7e37n);
  });

  it("distinct word tuples give distinct seeds", () => {
    const seen = new Set([mix(0), mix(1), mix(0, 0), mix(0, 1), mix(1, 0), mix(1, 2, 3)]);
    expect(seen.size).toBe(6);
  });

  it("handles negative words like the server's 64-bit wrap", () => {
    expect(mix(-1)).toBe(mix(0xffffffffffffffffn));
  });
});
