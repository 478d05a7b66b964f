/** Typed client for the session service; the editor talks to nothing else. */

import type {
  ApiErrorBody,
  EditOp,
  GraphDto,
  SessionDto,
  SessionEventDto,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(body.detail ?? `HTTP ${status}`);
  }

  /** Human-readable lines for a toast: the detail plus any violations. */
  display(): string[] {
    const lines = [this.body.detail];
    for (const v of this.body.violations ?? []) {
      lines.push(v.location ? `${v.code} at STEP ${v.location}: ${v.message}` : v.message);
    }
    return lines;
  }
}

async function parseError(response: Response): Promise<never> {
  let body: ApiErrorBody;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    body = { detail: `HTTP ${response.status}` };
  }
  throw new ApiError(response.status, body);
}

export class ServiceClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  createSession(task: string, deferPlan = false): Promise<SessionDto> {
    return this.request("POST", "/sessions", { task, defer_plan: deferPlan });
  }

  getSession(id: string): Promise<SessionDto> {
    return this.request("GET", `/sessions/${id}`);
  }

  getGraph(id: string): Promise<GraphDto> {
    return this.request("GET", `/sessions/${id}/flowgraph?format=json`);
  }

  regenerate(id: string): Promise<SessionDto> {
    return this.request("POST", `/sessions/${id}/plan`);
  }

  applyEdit(id: string, op: EditOp): Promise<SessionDto> {
    return this.request("POST", `/sessions/${id}/edits`, op);
  }

  extend(id: string, target: string): Promise<SessionDto> {
    return this.request("POST", `/sessions/${id}/extend`, { target });
  }

  confirm(id: string): Promise<SessionDto> {
    return this.request("POST", `/sessions/${id}/confirm`);
  }

  chat(id: string, message: string): Promise<SessionDto> {
    return this.request("POST", `/sessions/${id}/chat`, { message });
  }

  reopen(id: string): Promise<SessionDto> {
    return this.request("POST", `/sessions/${id}/reopen`);
  }

  events(id: string, since = 0): Promise<SessionEventDto[]> {
    return this.request("GET", `/sessions/${id}/events?since=${since}`);
  }
}
