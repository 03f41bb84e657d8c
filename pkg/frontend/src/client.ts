/**
 * Thin fetch client for the session protocol. Each call returns the parsed
 * NDJSON messages; callers fold them into the view with applyAll.
 */

import { parseNdjson, type SessionMessage } from "./protocol.js";

export class SessionClient {
  constructor(
    private readonly baseUrl: string,
    public sessionId: string | null = null,
  ) {}

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<SessionMessage[]> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body !== undefined ? { "Content-Type": "application/json" } : {},
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const messages = parseNdjson(await response.text());
    for (const msg of messages) {
      if (msg.type !== "error" && "session" in msg && msg.session) {
        this.sessionId = msg.session;
      }
    }
    return messages;
  }

  private sessionPath(endpoint: string): string {
    if (!this.sessionId) {
      throw new Error("no session open");
    }
    return `/sessions/${this.sessionId}/${endpoint}`;
  }

  create(options?: {
    threshold?: number;
    initial_evidence?: { attribute: string; value: string; confidence?: number }[];
  }): Promise<SessionMessage[]> {
    return this.request("POST", "/sessions", options ?? {});
  }

  next(): Promise<SessionMessage[]> {
    return this.request("GET", this.sessionPath("next"));
  }

  beliefs(): Promise<SessionMessage[]> {
    return this.request("GET", this.sessionPath("beliefs"));
  }

  trace(): Promise<SessionMessage[]> {
    return this.request("GET", this.sessionPath("trace"));
  }

  answer(
    attribute: string,
    value: string,
    confidence = 1.0,
  ): Promise<SessionMessage[]> {
    return this.request("POST", this.sessionPath("answer"), {
      attribute,
      value,
      confidence,
    });
  }

  volunteer(
    evidence: { attribute: string; value: string; confidence?: number }[],
  ): Promise<SessionMessage[]> {
    return this.request("POST", this.sessionPath("volunteer"), { evidence });
  }
}
