/** Central view state. The UI never derives solver numbers itself: this
 * holds ids, selections, form values, and the last documents fetched. */

import type { FreezeSelection, SolverForm } from "./freeze.js";
import { DEFAULT_FORM } from "./freeze.js";
import type { HeatmapLayout, IntensityScale } from "./heatmap.js";
import type { InstanceDoc, ProgressEvent, SolutionDoc } from "./types.js";

export interface ViewState {
  instanceId: string | null;
  instance: InstanceDoc | null;
  selectedSamples: string[];
  slice: string[];
  sliceScale: IntensityScale;
  /** Snapshot kept while the freeze-view toggle is on. */
  frozenHeatmap: HeatmapLayout | null;
  form: SolverForm;
  selections: FreezeSelection[];
  activeJobId: string | null;
  jobStatus: string | null;
  events: ProgressEvent[];
  eventsCursor: number;
  solution: SolutionDoc | null;
  solutionJobId: string | null;
}

export function initialState(): ViewState {
  return {
    instanceId: null,
    instance: null,
    selectedSamples: [],
    slice: [],
    sliceScale: "linear",
    frozenHeatmap: null,
    form: { ...DEFAULT_FORM },
    selections: [],
    activeJobId: null,
    jobStatus: null,
    events: [],
    eventsCursor: 0,
    solution: null,
    solutionJobId: null,
  };
}

export function toggleSample(state: ViewState, sampleId: string): void {
  if (!state.instance || !state.instance.samples.some((s) => s.id === sampleId)) {
    return; // selections must reference existing sample ids
  }
  const idx = state.selectedSamples.indexOf(sampleId);
  if (idx >= 0) {
    state.selectedSamples.splice(idx, 1);
  } else {
    state.selectedSamples.push(sampleId);
  }
}

export function resetForJob(state: ViewState, jobId: string): void {
  state.activeJobId = jobId;
  state.jobStatus = "queued";
  state.events = [];
  state.eventsCursor = 0;
}
