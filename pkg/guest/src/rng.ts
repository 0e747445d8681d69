/**
 * SplitMix64, bit for bit the generator the host lab uses.
 *
 * Everything runs on BigInt and is masked back to 64 bits after every
 * arithmetic step.  The host derives per-iteration playout seeds from
 * this stream, so the guest must produce the identical sequence or the
 * two sides silently search different trees.
 */

export const MASK64 = (1n << 64n) - 1n;

const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

export function mix64(z: bigint): bigint {
  z &= MASK64;
  z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
  z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
  return z ^ (z >> 31n);
}

export function sm64Next(state: bigint): [bigint, bigint] {
  state = (state + GAMMA) & MASK64;
  return [state, mix64(state)];
}

export class Rng {
  state: bigint;

  constructor(seed: bigint) {
    this.state = seed & MASK64;
  }

  nextU64(): bigint {
    const [state, out] = sm64Next(this.state);
    this.state = state;
    return out;
  }

  /** Modulo reduction on purpose: the host does the same. */
  nextBelow(bound: number): number {
    if (bound <= 0) {
      throw new RangeError(`bound must be positive, got ${bound}`);
    }
    return Number(this.nextU64() % BigInt(bound));
  }
}
