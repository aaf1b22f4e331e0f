/** Slice heatmap: rows are the selected samples in order, columns are q
 * bins, color encodes intensity under the chosen scaling view. */

import type { InstanceDoc } from "./types.js";

export type IntensityScale = "linear" | "log" | "percentile";

export interface HeatmapLayout {
  rows: string[]; // sample ids, top to bottom
  q: number[];
  /** Normalized cell values in [0, 1], rows x q bins. */
  cells: number[][];
  scale: IntensityScale;
}

function normalize(values: number[][], scale: IntensityScale): number[][] {
  const flat = values.flat();
  if (flat.length === 0) {
    return values;
  }
  if (scale === "percentile") {
    const sorted = [...flat].sort((a, b) => a - b);
    const rank = (v: number) => {
      let lo = 0;
      let hi = sorted.length;
      while (lo < hi) {
        const mid = (lo + hi) >> 1;
        if (sorted[mid] <= v) {
          lo = mid + 1;
        } else {
          hi = mid;
        }
      }
      return sorted.length > 1 ? lo / sorted.length : 0.5;
    };
    return values.map((row) => row.map(rank));
  }
  const xform = scale === "log" ? (v: number) => Math.log1p(v) : (v: number) => v;
  let min = Infinity;
  let max = -Infinity;
  for (const v of flat) {
    const t = xform(v);
    min = Math.min(min, t);
    max = Math.max(max, t);
  }
  if (!(max > min)) {
    // constant slice: uniform color
    return values.map((row) => row.map(() => 0.5));
  }
  return values.map((row) => row.map((v) => (xform(v) - min) / (max - min)));
}

export function sliceHeatmapLayout(
  instance: InstanceDoc,
  sliceIds: string[],
  scale: IntensityScale = "linear",
): HeatmapLayout {
  if (sliceIds.length === 0) {
    throw new Error("slice must contain at least one sample");
  }
  const byId = new Map(instance.samples.map((s) => [s.id, s]));
  const rows: string[] = [];
  const values: number[][] = [];
  for (const id of sliceIds) {
    const sample = byId.get(id);
    if (!sample) {
      throw new Error(`unknown sample id ${id}`);
    }
    rows.push(id);
    values.push([...sample.intensity]);
  }
  return { rows, q: instance.q, cells: normalize(values, scale), scale };
}

/** Viridis-ish ramp without dependencies. */
export function heatColor(t: number): string {
  const x = Math.min(1, Math.max(0, t));
  const r = Math.round(255 * Math.min(1, Math.max(0, 1.5 * x - 0.25)));
  const g = Math.round(255 * Math.min(1, Math.max(0, 1.2 * x + 0.05)));
  const b = Math.round(255 * Math.min(1, Math.max(0, 1.1 - 1.3 * x)));
  return `rgb(${r},${g},${b})`;
}
