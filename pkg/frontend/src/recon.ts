/** Reconstruction plot series: measured pattern, total reconstruction,
 * and per-basis shifted contributions for one sample.
 *
 * The series combine W, H, and the log grid exactly as the service's
 * published model defines them (sum of row-shifted basis columns); no
 * solver quantity is re-derived beyond composing those arrays for
 * display.
 */

import type { InstanceDoc, SolutionDoc } from "./types.js";

export interface Series {
  label: string;
  q: number[];
  y: number[];
}

export interface ReconstructionView {
  measured: Series;
  total: Series;
  perBasis: Series[];
}

/** Contribution of one basis at one sample on the log grid. */
export function basisContribution(
  solution: SolutionDoc,
  phase: number,
  sample: number,
): number[] {
  const n = solution.W.length;
  const out = new Array<number>(n).fill(0);
  solution.H.forEach((hm, m) => {
    const h = hm[phase][sample];
    if (h === 0) {
      return;
    }
    for (let i = 0; i + m < n; i++) {
      out[i + m] += solution.W[i][phase] * h;
    }
  });
  return out;
}

/** The pattern a pinned/initialized basis renders as: (log q, W column). */
export function basisOverlay(solution: SolutionDoc, phase: number): Series {
  return {
    label: `basis ${phase + 1}`,
    q: solution.log_q,
    y: solution.W.map((row) => row[phase]),
  };
}

export function reconstructionSeries(
  instance: InstanceDoc,
  solution: SolutionDoc,
  sampleId: string,
  mode: "total" | "per-basis",
): ReconstructionView {
  const j = instance.samples.findIndex((s) => s.id === sampleId);
  if (j < 0) {
    throw new Error(`unknown sample id ${sampleId}`);
  }
  const sample = instance.samples[j];
  const k = solution.W[0].length;
  const n = solution.log_q.length;

  const perBasis: Series[] = [];
  const total = new Array<number>(n).fill(0);
  for (let a = 0; a < k; a++) {
    const contrib = basisContribution(solution, a, j);
    for (let i = 0; i < n; i++) {
      total[i] += contrib[i];
    }
    if (mode === "per-basis") {
      perBasis.push({ label: `basis ${a + 1}`, q: solution.log_q, y: contrib });
    }
  }

  return {
    measured: { label: "measured", q: instance.q, y: [...sample.intensity] },
    total: { label: "reconstruction", q: solution.log_q, y: total },
    perBasis,
  };
}

/** Residual readout shown next to the chart: ||A - R|| / ||A|| on the
 * log grid bins nearest to the measured samples is not available
 * client-side, so the displayed number compares the measured pattern
 * against the reconstruction interpolated at the measured q values. */
export function residualReadout(view: ReconstructionView): number {
  const { measured, total } = view;
  let num = 0;
  let den = 0;
  for (let i = 0; i < measured.q.length; i++) {
    const q = measured.q[i];
    const r = sampleSeries(total, q);
    num += (measured.y[i] - r) ** 2;
    den += measured.y[i] ** 2;
  }
  return den > 0 ? Math.sqrt(num / den) : 0;
}

/** Piecewise-linear read of a series at one q (zero outside range).
 * Uses the slope form so a value landing on a resampled node reproduces
 * the service's interpolation bit for bit. */
export function sampleSeries(series: Series, q: number): number {
  const { q: xs, y } = series;
  if (q < xs[0] || q > xs[xs.length - 1]) {
    return 0;
  }
  let lo = 0;
  let hi = xs.length - 1;
  while (hi - lo > 1) {
    const mid = (lo + hi) >> 1;
    if (xs[mid] <= q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (q === xs[lo]) {
    return y[lo];
  }
  if (q === xs[hi]) {
    return y[hi];
  }
  const slope = (y[hi] - y[lo]) / (xs[hi] - xs[lo]);
  return slope * (q - xs[lo]) + y[lo];
}
