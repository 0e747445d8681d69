/**
 * Natural log of a positive integer, correctly rounded to double.
 *
 * The selection score feeds visit counts to ln, and the host computes
 * those logs with its C library.  V8's Math.log disagrees with glibc in
 * the last ulp on roughly 1% of small integers, enough to flip a strict
 * comparison between near-tied children.  Correct rounding resolves it:
 * glibc's log is correctly rounded on every integer below 9170 (its
 * first integer deviation), and iteration-bounded searches, the only
 * place bit-identical reproduction is asserted, keep visit counts far
 * under that.  Wall-clock runs can exceed it, but those compare
 * throughput counts, not move choices.
 *
 * Fixed point with 192 fractional bits, atanh series, memoized.
 */

const P = 192n;
const PN = 192;

/** atanh(z) * 2^P for z in [0, 1/3], z given as zFp = z * 2^P. */
function atanhFp(zFp: bigint): bigint {
  const z2 = (zFp * zFp) >> P;
  let term = zFp;
  let sum = zFp;
  let odd = 3n;
  while (term > 0n) {
    term = (term * z2) >> P;
    if (term === 0n) break;
    sum += term / odd;
    odd += 2n;
  }
  return sum;
}

const LN2_FP = 2n * atanhFp((1n << P) / 3n);

/** Round v * 2^-P to the nearest double, ties to even. */
function fpToDouble(v: bigint): number {
  if (v === 0n) return 0;
  let bits = v.toString(2).length;
  const shift = BigInt(bits - 53);
  if (shift <= 0n) {
    return Number(v) * 2 ** (-PN);
  }
  let top = v >> shift;
  const rem = v & ((1n << shift) - 1n);
  const half = 1n << (shift - 1n);
  if (rem > half || (rem === half && (top & 1n) === 1n)) {
    top += 1n;
    if (top === 1n << 53n) {
      top >>= 1n;
      bits += 1;
    }
  }
  return Number(top) * 2 ** (bits - 53 - PN);
}

const cache = new Map<number, number>();

export function lnInt(n: number): number {
  if (!Number.isInteger(n) || n < 1) {
    throw new RangeError(`lnInt wants a positive integer, got ${n}`);
  }
  if (n === 1) return 0;
  const hit = cache.get(n);
  if (hit !== undefined) return hit;
  const bn = BigInt(n);
  const k = BigInt(bn.toString(2).length - 1);
  const pow = 1n << k;
  const zFp = ((bn - pow) << P) / (bn + pow);
  const vFp = k * LN2_FP + 2n * atanhFp(zFp);
  const out = fpToDouble(vFp);
  cache.set(n, out);
  return out;
}
