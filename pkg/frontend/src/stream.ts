// Reconnecting wrapper around one EventSource subscription.

import type { StreamEnvelope } from "./types.js";

export interface EventSourceLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface StreamHandlers {
  onEvent: (env: StreamEnvelope) => void;
  // fires "live" on every (re)connect so the caller can reconcile state
  onState: (state: "live" | "reconnecting") => void;
}

const MAX_RETRY_MS = 15000;

export class LiveStream {
  private es: EventSourceLike | null = null;
  private retryMs = 1000;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private closed = false;

  constructor(
    private url: string,
    private handlers: StreamHandlers,
    private factory: EventSourceFactory = (u) =>
      new EventSource(u) as unknown as EventSourceLike,
  ) {}

  connect(): void {
    if (this.closed) return;
    const es = this.factory(this.url);
    this.es = es;
    es.onopen = () => {
      this.retryMs = 1000;
      this.handlers.onState("live");
    };
    es.onmessage = (ev) => {
      let env: StreamEnvelope;
      try {
        env = JSON.parse(ev.data) as StreamEnvelope;
      } catch {
        return; // keepalive or junk
      }
      this.handlers.onEvent(env);
    };
    es.onerror = () => {
      es.close();
      if (this.closed) return;
      this.handlers.onState("reconnecting");
      this.timer = setTimeout(() => this.connect(), this.retryMs);
      this.retryMs = Math.min(this.retryMs * 2, MAX_RETRY_MS);
    };
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.es?.close();
  }
}
