/** Wire types for the solver service REST API. */

export interface SampleDoc {
  id: string;
  composition: number[];
  intensity: number[];
}

export interface InstanceDoc {
  elements: string[];
  q: number[];
  samples: SampleDoc[];
}

export interface SolverConfigDoc {
  k: number;
  m?: number;
  sparsity?: number | number[];
  conv_gap?: number;
  max_iters?: number;
  seed?: number;
  n_el?: number;
  gibbs?: "off" | "greedy" | "exact";
  gibbs_rounds?: number;
  epsilon?: number;
  oversample?: number;
}

/** One freeze-from-sample directive, expanded server-side. */
export interface BasisFromSample {
  sample_id: string;
  basis: number;
  pin: boolean;
}

export interface FreezeDoc {
  basis_from_sample?: BasisFromSample[];
  w_mask?: boolean[][];
  w_values?: number[][];
  h_mask?: boolean[][][];
  h_values?: number[][][];
  w_init?: number[][];
  h_init?: number[][][];
}

export interface JobRequest {
  instance_id: string;
  config: SolverConfigDoc;
  freeze?: FreezeDoc;
}

export interface RefineRequest {
  config?: Partial<SolverConfigDoc>;
  freeze?: FreezeDoc;
}

export type JobStatus =
  | "queued"
  | "running"
  | "converged"
  | "rounding"
  | "refining"
  | "done"
  | "failed"
  | "cancelled";

export interface JobRecord {
  id: string;
  instance_id: string;
  status: JobStatus;
  config: SolverConfigDoc;
  error: string | null;
  created_at: number;
  updated_at: number;
  iterations: number;
  loss_trace_tail: number[];
  parent_id: string | null;
}

export interface ProgressEvent {
  iteration: number;
  loss: number;
  status: JobStatus;
}

export interface EventsPage {
  events: ProgressEvent[];
  cursor: number;
  status: JobStatus;
}

export interface SolutionDoc {
  log_q: number[];
  delta: number;
  W: number[][]; // N_log x K
  H: number[][][]; // M x K x J
  loss_trace: number[];
  segments: [string, number][];
  shift_summary: { s: number[][]; lambda: number[][] };
  presence: boolean[][]; // K x J
  config: SolverConfigDoc;
  iterations: number;
}
