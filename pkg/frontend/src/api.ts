/** Thin typed client for the solver service. Every call is recorded in
 * the action log; 4xx/5xx responses surface as ApiError with the server
 * body attached so panels can show it inline. */

import { ActionLog } from "./actionlog.js";
import type {
  EventsPage,
  InstanceDoc,
  JobRecord,
  JobRequest,
  RefineRequest,
  SolutionDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: unknown,
    path: string,
  ) {
    super(`${path} failed with ${status}: ${JSON.stringify(body)}`);
  }
}

export class ApiClient {
  constructor(
    private base: string = "",
    public log: ActionLog = new ActionLog(),
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.log.record(method, path, body);
    const resp = await fetch(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let parsed: unknown = null;
    const text = await resp.text();
    if (text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        parsed = text;
      }
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, parsed, path);
    }
    return parsed as T;
  }

  uploadInstance(doc: InstanceDoc): Promise<{ instance_id: string }> {
    return this.call("POST", "/api/instances", doc);
  }

  getInstance(id: string): Promise<InstanceDoc> {
    return this.call("GET", `/api/instances/${id}`);
  }

  submitJob(req: JobRequest): Promise<{ job_id: string }> {
    return this.call("POST", "/api/jobs", req);
  }

  jobStatus(id: string): Promise<JobRecord> {
    return this.call("GET", `/api/jobs/${id}`);
  }

  events(id: string, cursor: number): Promise<EventsPage> {
    return this.call("GET", `/api/jobs/${id}/events?cursor=${cursor}`);
  }

  solution(id: string): Promise<SolutionDoc> {
    return this.call("GET", `/api/jobs/${id}/solution`);
  }

  cancel(id: string): Promise<{ status: string }> {
    return this.call("POST", `/api/jobs/${id}/cancel`);
  }

  refine(id: string, req: RefineRequest): Promise<{ job_id: string }> {
    return this.call("POST", `/api/jobs/${id}/refine`, req);
  }
}
