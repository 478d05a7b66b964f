/** Client-side session mirror: server-authoritative, one mutation in flight.
 *
 * Every mutating call goes through `mutate`, which blocks overlapping
 * mutations, re-syncs the phase from the response, and refetches the graph
 * so the rendered view always equals a fresh server fetch. On rejection the
 * previously fetched state is kept (the optimistic layer lives in the DOM
 * only) and the server's violation list is surfaced verbatim.
 */

import type { ServiceClient } from "./api.js";
import { ApiError } from "./api.js";
import { buildViewGraph, type ViewGraph } from "./layout.js";
import type { EditAction } from "./actions.js";
import { toEditOp } from "./actions.js";
import type { GraphDto, SessionDto, SessionPhase } from "./types.js";

export interface UiErrorReport {
  lines: string[];
  status: number | null;
}

export class UiSession {
  session: SessionDto | null = null;
  graph: GraphDto | null = null;
  view: ViewGraph | null = null;
  pending = false;
  lastError: UiErrorReport | null = null;

  private listeners: Array<() => void> = [];

  constructor(readonly client: ServiceClient) {}

  get phase(): SessionPhase | null {
    return this.session?.state ?? null;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  private async refreshGraph(): Promise<void> {
    if (!this.session || this.session.state === "drafting" || !this.session.workflow) {
      this.graph = null;
      this.view = null;
      return;
    }
    this.graph = await this.client.getGraph(this.session.id);
    this.view = buildViewGraph(this.graph);
  }

  private async mutate(call: () => Promise<SessionDto>): Promise<boolean> {
    if (this.pending) return false;
    this.pending = true;
    this.lastError = null;
    this.emit();
    try {
      this.session = await call();
      await this.refreshGraph();
      return true;
    } catch (error) {
      if (error instanceof ApiError) {
        this.lastError = { lines: error.display(), status: error.status };
        // server is authoritative: drop any optimistic DOM state by re-syncing
        if (this.session) {
          this.session = await this.client.getSession(this.session.id);
          await this.refreshGraph();
        }
        return false;
      }
      this.lastError = { lines: [String(error)], status: null };
      return false;
    } finally {
      this.pending = false;
      this.emit();
    }
  }

  async start(task: string): Promise<boolean> {
    return this.mutate(() => this.client.createSession(task));
  }

  async load(sessionId: string): Promise<boolean> {
    return this.mutate(() => this.client.getSession(sessionId));
  }

  async dispatchEdit(action: EditAction): Promise<boolean> {
    const id = this.requireId();
    return this.mutate(() => this.client.applyEdit(id, toEditOp(action)));
  }

  async extend(target: string): Promise<boolean> {
    const id = this.requireId();
    return this.mutate(() => this.client.extend(id, target));
  }

  async regenerate(): Promise<boolean> {
    const id = this.requireId();
    return this.mutate(() => this.client.regenerate(id));
  }

  async confirm(): Promise<boolean> {
    const id = this.requireId();
    return this.mutate(() => this.client.confirm(id));
  }

  async chat(message: string): Promise<boolean> {
    const id = this.requireId();
    return this.mutate(() => this.client.chat(id, message));
  }

  async reopen(): Promise<boolean> {
    const id = this.requireId();
    return this.mutate(() => this.client.reopen(id));
  }

  private requireId(): string {
    if (!this.session) throw new Error("no active session");
    return this.session.id;
  }
}
