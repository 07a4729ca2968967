/** SplitMix64 over BigInt, matching the server's generator bit for bit.
 *
 * The server derives every mask plan from this stream, so mirroring it
 * lets strategy presets preview exactly the cells the server would pick
 * for the same (strategy, ratio, seed).
 */

const MASK64 = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MUL1 = 0xbf58476d1ce4e5b9n;
const MUL2 = 0x94d049bb133111ebn;

function mix64(z: bigint): bigint {
  z &= MASK64;
  z = ((z ^ (z >> 30n)) * MUL1) & MASK64;
  z = ((z ^ (z >> 27n)) * MUL2) & MASK64;
  return z ^ (z >> 31n);
}

/** Fold integer words into a single 64-bit seed, one stream step per word. */
export function mix(...words: Array<number | bigint>): bigint {
  let state = 0n;
  for (const w of words) {
    state = (state + GAMMA + BigInt.asUintN(64, BigInt(w))) & MASK64;
    state = mix64(state);
  }
  return state;
}

export class Mix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt.asUintN(64, BigInt(seed));
  }

  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK64;
    return mix64(this.state);
  }

  /** Uniform integer in [0, n) via multiply-shift reduction. */
  below(n: number): number {
    if (n <= 0) throw new RangeError("below() needs n >= 1");
    return Number((this.nextU64() * BigInt(n)) >> 64n);
  }

  /** First k entries of a partial Fisher-Yates shuffle of 0..n-1, draw order. */
  sampleWithoutReplacement(n: number, k: number): number[] {
    if (k < 0 || k > n) throw new RangeError("need 0 <= k <= n");
    const pool = Array.from({ length: n }, (_, i) => i);
    for (let i = 0; i < k; i++) {
      const j = i + this.below(n - i);
      [pool[i], pool[j]] = [pool[j], pool[i]];
    }
    return pool.slice(0, k);
  }
}
