/**
 * Glyph grid geometry and rendering. The output markup is byte-identical to
 * the CLI SVG exporter's for the same inputs (golden-file cross-checked):
 * square area is linear in (1 - variability) above a minimum-area floor,
 * squares are centered, features wrap row-major at `wrapWidth` cells.
 */

import { impactColor } from "./colormap.js";

export interface GridSpec {
  wrapWidth: number;
  cellSize: number;
  minAreaFraction: number;
}

export const DEFAULT_GRID: GridSpec = {
  wrapWidth: 150,
  cellSize: 12,
  minAreaFraction: 0.04,
};

export function squareSide(
  variability: number,
  cellSize: number,
  minAreaFraction: number = DEFAULT_GRID.minAreaFraction,
): number {
  if (!(variability >= 0 && variability <= 1)) {
    throw new RangeError(`variability must lie in [0, 1], got ${variability}`);
  }
  if (!(minAreaFraction > 0 && minAreaFraction < 1)) {
    throw new RangeError(`minAreaFraction must lie in (0, 1), got ${minAreaFraction}`);
  }
  const area = minAreaFraction + (1 - variability) * (1 - minAreaFraction);
  return cellSize * Math.sqrt(area);
}

export function gridRows(featureCount: number, wrapWidth: number): number {
  return Math.ceil(featureCount / wrapWidth);
}

/** Mimics Python's "%g" for the plain magnitudes used in grid dimensions. */
function formatG(value: number): string {
  if (Number.isInteger(value)) return String(value);
  return String(Number(value.toPrecision(6)));
}

export function renderGridSvg(
  impact: readonly number[],
  variability: readonly number[],
  spec: GridSpec = DEFAULT_GRID,
): string {
  if (impact.length !== variability.length) {
    throw new RangeError(
      `impact (${impact.length}) and variability (${variability.length}) lengths differ`,
    );
  }
  if (spec.wrapWidth < 1) {
    throw new RangeError(`wrapWidth must be >= 1, got ${spec.wrapWidth}`);
  }
  const rows = gridRows(impact.length, spec.wrapWidth);
  const width = spec.wrapWidth * spec.cellSize;
  const height = rows * spec.cellSize;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${formatG(width)}" ` +
      `height="${formatG(height)}" viewBox="0 0 ${formatG(width)} ${formatG(height)}">`,
  ];
  for (let t = 0; t < impact.length; t++) {
    const row = Math.floor(t / spec.wrapWidth);
    const col = t % spec.wrapWidth;
    const side = squareSide(variability[t], spec.cellSize, spec.minAreaFraction);
    const x = col * spec.cellSize + (spec.cellSize - side) / 2;
    const y = row * spec.cellSize + (spec.cellSize - side) / 2;
    parts.push(
      `<rect data-feature="${t}" x="${x.toFixed(4)}" y="${y.toFixed(4)}" ` +
        `width="${side.toFixed(4)}" height="${side.toFixed(4)}" fill="${impactColor(impact[t])}"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}

/** Histogram bars as a standalone SVG; returns the markup plus the pixel
 * scale needed to translate brush pixels back into impact values. */
export interface HistogramLayout {
  svg: string;
  plotLeft: number;
  plotWidth: number;
  lo: number;
  hi: number;
}

export function renderHistogramSvg(
  binEdges: readonly number[],
  counts: readonly number[],
  width = 420,
  height = 140,
): HistogramLayout {
  const pad = 8;
  const plotLeft = pad;
  const plotWidth = width - 2 * pad;
  const lo = binEdges[0];
  const hi = binEdges[binEdges.length - 1];
  const span = hi - lo || 1;
  const peak = Math.max(...counts, 1);
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" class="histogram">`,
  ];
  for (let i = 0; i < counts.length; i++) {
    const x0 = plotLeft + ((binEdges[i] - lo) / span) * plotWidth;
    const x1 = plotLeft + ((binEdges[i + 1] - lo) / span) * plotWidth;
    const barHeight = (counts[i] / peak) * (height - 2 * pad);
    parts.push(
      `<rect class="bar" data-bin="${i}" x="${x0.toFixed(2)}" ` +
        `y="${(height - pad - barHeight).toFixed(2)}" ` +
        `width="${Math.max(x1 - x0 - 1, 1).toFixed(2)}" height="${barHeight.toFixed(2)}"/>`,
    );
  }
  parts.push("</svg>");
  return { svg: parts.join("\n"), plotLeft, plotWidth, lo, hi };
}

/** Translate a horizontal pixel position on the histogram into an impact value. */
export function pixelToValue(px: number, layout: HistogramLayout): number {
  const clamped = Math.min(Math.max(px, layout.plotLeft), layout.plotLeft + layout.plotWidth);
  const fraction = (clamped - layout.plotLeft) / layout.plotWidth;
  return layout.lo + fraction * (layout.hi - layout.lo);
}
