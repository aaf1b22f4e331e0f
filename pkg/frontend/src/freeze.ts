/** Solver form validation and freeze-directive building.
 *
 * Selections name samples; the service expands them into pinned or
 * initial basis columns on its log grid, so no grid arithmetic happens
 * client-side.
 */

import type { FreezeDoc, JobRequest, SolverConfigDoc } from "./types.js";

export interface SolverForm {
  k: number;
  m: number;
  sparsity: number;
  convGap: number;
  maxIters: number;
  seed: number;
  nEl: number;
  gibbs: "off" | "greedy" | "exact";
  gibbsRounds: number;
  oversample: number;
}

export const DEFAULT_FORM: SolverForm = {
  k: 3,
  m: 1,
  sparsity: 0,
  convGap: 2e-5,
  maxIters: 5000,
  seed: 0,
  nEl: 3,
  gibbs: "off",
  gibbsRounds: 1,
  oversample: 1,
};

export interface FreezeSelection {
  sampleId: string;
  basis: number;
  mode: "pin" | "init";
}

/** Client-side mirror of the solver config bounds; returns messages. */
export function validateForm(form: SolverForm, sampleCount?: number): string[] {
  const errors: string[] = [];
  if (!Number.isInteger(form.k) || form.k < 1) {
    errors.push("k must be an integer >= 1");
  }
  if (!Number.isInteger(form.m) || form.m < 1) {
    errors.push("m must be an integer >= 1");
  }
  if (!(form.sparsity >= 0)) {
    errors.push("sparsity must be >= 0");
  }
  if (!(form.convGap > 0)) {
    errors.push("convergence gap must be > 0");
  }
  if (!Number.isInteger(form.maxIters) || form.maxIters < 1) {
    errors.push("max iterations must be an integer >= 1");
  }
  if (!Number.isInteger(form.nEl) || form.nEl < 1) {
    errors.push("phase limit must be an integer >= 1");
  }
  if (!Number.isInteger(form.gibbsRounds) || form.gibbsRounds < 1) {
    errors.push("gibbs rounds must be an integer >= 1");
  }
  if (!(form.oversample > 0)) {
    errors.push("oversample must be > 0");
  }
  if (!["off", "greedy", "exact"].includes(form.gibbs)) {
    errors.push("unknown gibbs mode");
  }
  if (sampleCount !== undefined && sampleCount < 1) {
    errors.push("instance has no samples");
  }
  return errors;
}

export function validateSelections(
  selections: FreezeSelection[],
  form: SolverForm,
  sampleIds: Set<string>,
): string[] {
  const errors: string[] = [];
  const seen = new Set<number>();
  for (const sel of selections) {
    if (!sampleIds.has(sel.sampleId)) {
      errors.push(`selection references unknown sample ${sel.sampleId}`);
    }
    if (!Number.isInteger(sel.basis) || sel.basis < 0 || sel.basis >= form.k) {
      errors.push(`basis index ${sel.basis} out of range for k=${form.k}`);
    }
    if (seen.has(sel.basis)) {
      errors.push(`basis ${sel.basis} assigned twice`);
    }
    seen.add(sel.basis);
  }
  return errors;
}

export function formToConfig(form: SolverForm): SolverConfigDoc {
  return {
    k: form.k,
    m: form.m,
    sparsity: form.sparsity,
    conv_gap: form.convGap,
    max_iters: form.maxIters,
    seed: form.seed,
    n_el: form.nEl,
    gibbs: form.gibbs,
    gibbs_rounds: form.gibbsRounds,
    oversample: form.oversample,
  };
}

export function selectionsToFreeze(selections: FreezeSelection[]): FreezeDoc | undefined {
  if (selections.length === 0) {
    return undefined;
  }
  return {
    basis_from_sample: selections.map((sel) => ({
      sample_id: sel.sampleId,
      basis: sel.basis,
      pin: sel.mode === "pin",
    })),
  };
}

export function buildJobRequest(
  instanceId: string,
  form: SolverForm,
  selections: FreezeSelection[],
): JobRequest {
  const req: JobRequest = { instance_id: instanceId, config: formToConfig(form) };
  const freeze = selectionsToFreeze(selections);
  if (freeze) {
    req.freeze = freeze;
  }
  return req;
}
