/** Wires the panels together: instance upload, composition map, slice
 * heatmap, reconstruction view, solver form, job polling, action log. */

import { ApiClient, ApiError } from "./api.js";
import { buildJobRequest, validateForm, validateSelections } from "./freeze.js";
import type { FreezeSelection, SolverForm } from "./freeze.js";
import { sliceHeatmapLayout } from "./heatmap.js";
import type { IntensityScale } from "./heatmap.js";
import { reconstructionSeries, residualReadout } from "./recon.js";
import { drawCompositionMap, drawHeatmap, drawLines } from "./render.js";
import { initialState, resetForJob, toggleSample } from "./state.js";
import { compositionMapLayout } from "./ternary.js";
import type { Overlay } from "./ternary.js";

const api = new ApiClient("");
const state = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function showError(err: unknown): void {
  const box = el<HTMLDivElement>("errors");
  box.textContent =
    err instanceof ApiError
      ? `HTTP ${err.status}: ${JSON.stringify(err.body)}`
      : String(err);
  box.style.display = "block";
  setTimeout(() => (box.style.display = "none"), 8000);
}

function refreshActionLog(): void {
  el<HTMLPreElement>("action-log").textContent = JSON.stringify(api.log.toJSON(), null, 1);
}

function currentOverlay(): Overlay {
  const mode = el<HTMLSelectElement>("overlay-mode").value;
  if (mode === "phase-count") {
    return { kind: "phase-count" };
  }
  if (mode.startsWith("phase-")) {
    return { kind: "phase", phase: Number(mode.slice(6)) };
  }
  return { kind: "none" };
}

function redrawMap(): void {
  if (!state.instance) {
    return;
  }
  const layout = compositionMapLayout(
    state.instance,
    state.solution,
    currentOverlay(),
    state.form.nEl,
  );
  drawCompositionMap(el("composition-map"), layout, onPickSample, new Set(state.selectedSamples));
}

function redrawHeatmap(): void {
  if (!state.instance) {
    return;
  }
  const frozen = el<HTMLInputElement>("freeze-heatmap").checked;
  if (frozen && state.frozenHeatmap) {
    drawHeatmap(el("slice-heatmap"), state.frozenHeatmap);
    return;
  }
  state.slice = [...state.selectedSamples];
  if (state.slice.length === 0) {
    el("slice-heatmap").replaceChildren();
    return;
  }
  state.sliceScale = el<HTMLSelectElement>("heatmap-scale").value as IntensityScale;
  const layout = sliceHeatmapLayout(state.instance, state.slice, state.sliceScale);
  state.frozenHeatmap = layout;
  drawHeatmap(el("slice-heatmap"), layout);
}

function redrawReconstruction(): void {
  if (!state.instance || !state.solution || state.selectedSamples.length === 0) {
    return;
  }
  const mode = el<HTMLSelectElement>("recon-mode").value as "total" | "per-basis";
  const view = reconstructionSeries(
    state.instance,
    state.solution,
    state.selectedSamples[state.selectedSamples.length - 1],
    mode,
  );
  drawLines(el("reconstruction"), [view.measured, view.total, ...view.perBasis]);
  el("residual").textContent = `relative residual: ${residualReadout(view).toExponential(2)}`;
}

function onPickSample(sampleId: string): void {
  toggleSample(state, sampleId);
  redrawMap();
  redrawHeatmap();
  redrawReconstruction();
}

function readForm(): SolverForm {
  const num = (id: string) => Number(el<HTMLInputElement>(id).value);
  return {
    k: num("form-k"),
    m: num("form-m"),
    sparsity: num("form-sparsity"),
    convGap: num("form-convgap"),
    maxIters: num("form-maxiters"),
    seed: num("form-seed"),
    nEl: num("form-nel"),
    gibbs: el<HTMLSelectElement>("form-gibbs").value as SolverForm["gibbs"],
    gibbsRounds: num("form-gibbsrounds"),
    oversample: num("form-oversample"),
  };
}

function readSelections(): FreezeSelection[] {
  const basisRaw = el<HTMLInputElement>("freeze-basis").value.trim();
  const mode = el<HTMLSelectElement>("freeze-mode").value as "pin" | "init" | "none";
  if (mode === "none" || basisRaw === "" || state.selectedSamples.length === 0) {
    return [];
  }
  const firstBasis = Number(basisRaw) - 1; // 1-based in the UI
  return state.selectedSamples.map((sampleId, i) => ({
    sampleId,
    basis: firstBasis + i,
    mode,
  }));
}

async function uploadInstance(): Promise<void> {
  const file = el<HTMLInputElement>("instance-file").files?.[0];
  if (!file) {
    return;
  }
  const doc = JSON.parse(await file.text());
  const { instance_id } = await api.uploadInstance(doc);
  state.instanceId = instance_id;
  state.instance = await api.getInstance(instance_id);
  state.selectedSamples = [];
  state.solution = null;
  el("instance-info").textContent =
    `${instance_id}: ${state.instance.samples.length} samples, ` +
    `${state.instance.q.length} q bins [${state.instance.elements.join(", ")}]`;
  redrawMap();
  refreshActionLog();
}

let pollTimer: number | null = null;

function updateOverlayChoices(): void {
  const select = el<HTMLSelectElement>("overlay-mode");
  const k = state.solution ? state.solution.W[0].length : 0;
  const options = ["none", "phase-count"];
  for (let a = 0; a < k; a++) {
    options.push(`phase-${a}`);
  }
  select.replaceChildren(
    ...options.map((v) => {
      const o = document.createElement("option");
      o.value = v;
      o.textContent = v === "none" ? "samples only" : v === "phase-count" ? "phase count" : `phase ${Number(v.slice(6)) + 1}`;
      return o;
    }),
  );
}

async function pollActiveJob(): Promise<void> {
  if (!state.activeJobId) {
    return;
  }
  try {
    const page = await api.events(state.activeJobId, state.eventsCursor);
    state.events.push(...page.events);
    state.eventsCursor = page.cursor;
    state.jobStatus = page.status;
    el("job-status").textContent = `${state.activeJobId}: ${page.status}`;
    const losses = state.events.map((e, i) => ({ x: i, y: e.loss }));
    drawLines(
      el("loss-curve"),
      [{ label: "loss", q: losses.map((p) => p.x), y: losses.map((p) => p.y) }],
      { logY: true, height: 180 },
    );
    if (["done", "failed", "cancelled"].includes(page.status)) {
      if (pollTimer !== null) {
        clearInterval(pollTimer);
        pollTimer = null;
      }
      if (page.status === "done") {
        state.solution = await api.solution(state.activeJobId);
        state.solutionJobId = state.activeJobId;
        updateOverlayChoices();
        redrawMap();
        redrawReconstruction();
      }
    }
  } catch (err) {
    showError(err);
  }
  refreshActionLog();
}

async function submitJob(): Promise<void> {
  if (!state.instanceId || !state.instance) {
    showError("upload an instance first");
    return;
  }
  state.form = readForm();
  state.selections = readSelections();
  const errors = validateForm(state.form, state.instance.samples.length).concat(
    validateSelections(
      state.selections,
      state.form,
      new Set(state.instance.samples.map((s) => s.id)),
    ),
  );
  if (errors.length > 0) {
    showError(errors.join("; "));
    return;
  }
  try {
    const req = buildJobRequest(state.instanceId, state.form, state.selections);
    const useRefine = el<HTMLInputElement>("refine-parent").checked && state.solutionJobId;
    const resp = useRefine
      ? await api.refine(state.solutionJobId as string, { config: req.config, freeze: req.freeze })
      : await api.submitJob(req);
    resetForJob(state, resp.job_id);
    if (pollTimer === null) {
      pollTimer = setInterval(pollActiveJob, 300) as unknown as number;
    }
  } catch (err) {
    showError(err);
  }
  refreshActionLog();
}

async function cancelJob(): Promise<void> {
  if (!state.activeJobId) {
    return;
  }
  try {
    await api.cancel(state.activeJobId);
  } catch (err) {
    showError(err);
  }
  refreshActionLog();
}

export function start(): void {
  el("instance-file").addEventListener("change", () => uploadInstance().catch(showError));
  el("submit-job").addEventListener("click", () => submitJob());
  el("cancel-job").addEventListener("click", () => cancelJob());
  el("overlay-mode").addEventListener("change", redrawMap);
  el("heatmap-scale").addEventListener("change", redrawHeatmap);
  el("freeze-heatmap").addEventListener("change", redrawHeatmap);
  el("recon-mode").addEventListener("change", redrawReconstruction);
}

if (typeof document !== "undefined" && document.getElementById("composition-map")) {
  start();
}
