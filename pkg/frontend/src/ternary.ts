/** Composition-map layout: barycentric placement plus overlays.
 *
 * All numbers come straight from service documents; this module only
 * arranges them for drawing.
 */

import type { InstanceDoc, SolutionDoc } from "./types.js";

/** 2-D corners of the composition triangle, one per element. */
export const TRIANGLE_CORNERS: [number, number][] = [
  [0, Math.sqrt(3) / 2],
  [1, Math.sqrt(3) / 2],
  [0.5, 0],
];

export interface MapPoint {
  sampleId: string;
  x: number;
  y: number;
  /** Marker radius scale in [0, 1]; overlay-dependent. */
  size: number;
  /** Overlay value behind the color (shift lambda or phase count). */
  value: number | null;
  color: string;
}

export type Overlay =
  | { kind: "none" }
  | { kind: "phase"; phase: number }
  | { kind: "phase-count" };

export interface CompositionMap {
  points: MapPoint[];
  /** True when the instance is not ternary and a grid layout is used. */
  fallbackGrid: boolean;
  notice: string | null;
  corners: [number, number][];
  elements: string[];
}

/** Barycentric coordinates to screen position (triangle side 1). */
export function baryToXY(composition: number[]): [number, number] {
  let x = 0;
  let y = 0;
  for (let i = 0; i < 3; i++) {
    x += composition[i] * TRIANGLE_CORNERS[i][0];
    y += composition[i] * TRIANGLE_CORNERS[i][1];
  }
  return [x, y];
}

function shiftColor(lambda: number, lambdaMax: number): string {
  // 1 -> blue, lambdaMax -> red
  const t = lambdaMax > 1 ? Math.min(1, Math.max(0, (lambda - 1) / (lambdaMax - 1))) : 0;
  const r = Math.round(40 + 215 * t);
  const b = Math.round(255 - 215 * t);
  return `rgb(${r},60,${b})`;
}

export function phaseCountColor(count: number, nEl: number): string {
  if (count > nEl) {
    return "#d62728"; // beyond the physical limit
  }
  const shades = ["#f0f0f0", "#c6dbef", "#6baed6", "#2171b5"];
  return shades[Math.min(count, shades.length - 1)];
}

/** Count of present phases per sample, read from the solution document. */
export function phaseCounts(solution: SolutionDoc): number[] {
  const k = solution.presence.length;
  const j = k > 0 ? solution.presence[0].length : 0;
  const counts = new Array<number>(j).fill(0);
  for (let a = 0; a < k; a++) {
    for (let b = 0; b < j; b++) {
      if (solution.presence[a][b]) {
        counts[b] += 1;
      }
    }
  }
  return counts;
}

/** Activation mass of one phase at one sample (all shift copies). */
export function phaseConcentration(solution: SolutionDoc, phase: number, sample: number): number {
  let total = 0;
  for (const hm of solution.H) {
    total += hm[phase][sample];
  }
  return total;
}

export function compositionMapLayout(
  instance: InstanceDoc,
  solution: SolutionDoc | null,
  overlay: Overlay,
  nEl: number = 3,
): CompositionMap {
  const ternary = instance.elements.length === 3;
  const base: CompositionMap = {
    points: [],
    fallbackGrid: !ternary,
    notice: ternary
      ? null
      : `instance has ${instance.elements.length} elements; showing sample-index grid`,
    corners: TRIANGLE_CORNERS,
    elements: instance.elements,
  };

  const positions: [number, number][] = instance.samples.map((s, idx) => {
    if (ternary) {
      return baryToXY(s.composition);
    }
    const cols = Math.ceil(Math.sqrt(instance.samples.length));
    return [(idx % cols) / Math.max(1, cols - 1 || 1), Math.floor(idx / cols) / cols];
  });

  if (overlay.kind === "phase" && solution) {
    const lam = solution.shift_summary.lambda[overlay.phase];
    const lambdaMax = Math.max(...lam, 1);
    let maxConc = 0;
    const conc = instance.samples.map((_, j) =>
      phaseConcentration(solution, overlay.phase, j),
    );
    for (const c of conc) {
      maxConc = Math.max(maxConc, c);
    }
    instance.samples.forEach((s, j) => {
      if (conc[j] <= 0) {
        return; // zero-concentration phase: point omitted
      }
      base.points.push({
        sampleId: s.id,
        x: positions[j][0],
        y: positions[j][1],
        size: maxConc > 0 ? conc[j] / maxConc : 0,
        value: lam[j],
        color: shiftColor(lam[j], lambdaMax),
      });
    });
    return base;
  }

  if (overlay.kind === "phase-count" && solution) {
    const counts = phaseCounts(solution);
    instance.samples.forEach((s, j) => {
      base.points.push({
        sampleId: s.id,
        x: positions[j][0],
        y: positions[j][1],
        size: 1,
        value: counts[j],
        color: phaseCountColor(counts[j], nEl),
      });
    });
    return base;
  }

  instance.samples.forEach((s, j) => {
    base.points.push({
      sampleId: s.id,
      x: positions[j][0],
      y: positions[j][1],
      size: 1,
      value: null,
      color: "#555",
    });
  });
  return base;
}
