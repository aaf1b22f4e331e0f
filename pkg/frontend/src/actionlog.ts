/** Replayable log of every HTTP call the UI makes.
 *
 * Any sequence of UI actions corresponds to exactly this list of calls,
 * so a session can be audited or replayed against a fresh service.
 */

export interface LoggedCall {
  method: string;
  path: string;
  body?: unknown;
}

export class ActionLog {
  private calls: LoggedCall[] = [];

  record(method: string, path: string, body?: unknown): void {
    this.calls.push(body === undefined ? { method, path } : { method, path, body });
  }

  entries(): readonly LoggedCall[] {
    return this.calls;
  }

  /** Serializable form shown in the log panel. */
  toJSON(): LoggedCall[] {
    return [...this.calls];
  }

  clear(): void {
    this.calls = [];
  }
}
