/**
 * Series line-plot helpers: min/max downsampling and cursor placement.
 *
 * Long series (tens of thousands of points) must redraw every animation
 * frame, so plots draw at most two points per pixel column: the bucket
 * minimum and maximum, preserving the visual envelope of the data.
 */

export interface PlotPoint {
  x: number;
  y: number;
}

/**
 * Reduce `values` to at most 2 points per pixel column.
 *
 * Each of `widthPx` buckets contributes its min and max (in index order), so
 * the polyline through the result covers the same vertical extent per column
 * as the full data. Series that already fit are passed through unchanged.
 */
export function downsampleMinMax(values: ArrayLike<number>, widthPx: number): PlotPoint[] {
  const n = values.length;
  if (widthPx <= 0 || n === 0) return [];
  if (n <= 2 * widthPx) {
    const points = new Array<PlotPoint>(n);
    for (let i = 0; i < n; i++) points[i] = { x: i, y: values[i]! };
    return points;
  }
  const points: PlotPoint[] = [];
  for (let px = 0; px < widthPx; px++) {
    const start = Math.floor((px * n) / widthPx);
    const end = Math.max(start + 1, Math.floor(((px + 1) * n) / widthPx));
    let minIdx = start;
    let maxIdx = start;
    for (let i = start + 1; i < end; i++) {
      if (values[i]! < values[minIdx]!) minIdx = i;
      if (values[i]! > values[maxIdx]!) maxIdx = i;
    }
    const first = Math.min(minIdx, maxIdx);
    const second = Math.max(minIdx, maxIdx);
    points.push({ x: first, y: values[first]! });
    if (second !== first) points.push({ x: second, y: values[second]! });
  }
  return points;
}

/** Horizontal pixel of the playback cursor over a plot of `length` rows. */
export function cursorPixel(cursor: number, length: number, widthPx: number): number {
  if (length <= 1) return 0;
  const frac = Math.min(1, Math.max(0, cursor / (length - 1)));
  return frac * (widthPx - 1);
}

/** Map a data value into plot pixel space (y grows downward). */
export function valueToPixel(value: number, min: number, max: number, heightPx: number): number {
  const span = max - min;
  const norm = span > 0 ? (value - min) / span : 0.5;
  return (1 - norm) * (heightPx - 1);
}

/** CSS color string from a server-assigned [r, g, b] 0..255 triple. */
export function cssColor(rgb: [number, number, number]): string {
  return `rgb(${Math.round(rgb[0])}, ${Math.round(rgb[1])}, ${Math.round(rgb[2])})`;
}
