// Node has no EventSource, so the live tests replay the wire protocol over
// fetch streaming: split frames on the blank line, collect data: fields,
// surface comments as nothing at all.

import type { EventSourceLike } from "../../src/stream.js";

export class FetchEventSource implements EventSourceLike {
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;

  private ctrl = new AbortController();

  constructor(url: string) {
    void this.pump(url);
  }

  private async pump(url: string): Promise<void> {
    try {
      const resp = await fetch(url, {
        headers: { accept: "text/event-stream" },
        signal: this.ctrl.signal,
      });
      if (!resp.ok || !resp.body) throw new Error(`stream http ${resp.status}`);
      this.onopen?.();
      const reader = resp.body.getReader();
      const decoder = new TextDecoder();
      let buf = "";
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buf += decoder.decode(value, { stream: true });
        for (;;) {
          const cut = buf.indexOf("\n\n");
          if (cut < 0) break;
          const frame = buf.slice(0, cut);
          buf = buf.slice(cut + 2);
          const data = frame
            .split("\n")
            .filter((line) => line.startsWith("data:"))
            .map((line) => line.slice(5).trimStart())
            .join("\n");
          if (data) this.onmessage?.({ data });
        }
      }
      if (!this.ctrl.signal.aborted) this.onerror?.();
    } catch {
      if (!this.ctrl.signal.aborted) this.onerror?.();
    }
  }

  close(): void {
    this.ctrl.abort();
  }
}
