/**
 * Diverging impact colormap. These constants are the published contract
 * shared with the CLI SVG exporter; golden files are cross-checked against
 * both renderers, so any change here is a breaking change of that contract.
 *
 * impact -1 -> blue #3B4CC0, 0 -> white #F7F7F7, +1 -> red #B40426,
 * interpolated linearly per 8-bit channel on each half, rounded half-up.
 */

export type Rgb = readonly [number, number, number];

export const NEGATIVE_ENDPOINT: Rgb = [0x3b, 0x4c, 0xc0];
export const NEUTRAL: Rgb = [0xf7, 0xf7, 0xf7];
export const POSITIVE_ENDPOINT: Rgb = [0xb4, 0x04, 0x26];

export function impactColor(impact: number): string {
  if (!(impact >= -1 && impact <= 1)) {
    throw new RangeError(`impact must lie in [-1, 1], got ${impact}`);
  }
  const [from, to, t] =
    impact < 0
      ? ([NEGATIVE_ENDPOINT, NEUTRAL, impact + 1] as const)
      : ([NEUTRAL, POSITIVE_ENDPOINT, impact] as const);
  const channel = (i: number) => Math.floor(from[i] + t * (to[i] - from[i]) + 0.5);
  return `#${hex2(channel(0))}${hex2(channel(1))}${hex2(channel(2))}`;
}

function hex2(value: number): string {
  return value.toString(16).padStart(2, "0");
}
