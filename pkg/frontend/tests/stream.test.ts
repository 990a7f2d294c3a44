import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { LiveStream } from "../src/stream.js";
import type { EventSourceLike } from "../src/stream.js";
import type { StreamEnvelope } from "../src/types.js";

class FakeSource implements EventSourceLike {
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  closed = false;

  close(): void {
    this.closed = true;
  }
}

let sources: FakeSource[];
let events: StreamEnvelope[];
let states: string[];

function makeStream(): LiveStream {
  sources = [];
  events = [];
  states = [];
  return new LiveStream(
    "/api/v1/stream",
    {
      onEvent: (env) => events.push(env),
      onState: (s) => states.push(s),
    },
    () => {
      const src = new FakeSource();
      sources.push(src);
      return src;
    },
  );
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("LiveStream", () => {
  it("parses frames and ignores keepalives", () => {
    const stream = makeStream();
    stream.connect();
    const src = sources[0] as FakeSource;
    src.onopen?.();
    expect(states).toEqual(["live"]);

    src.onmessage?.({ data: '{"event_type":"reading","event_seq":1,"payload":{}}' });
    src.onmessage?.({ data: "" }); // keepalive comment yields no data
    src.onmessage?.({ data: "not json" });
    expect(events.length).toBe(1);
    expect(events[0]?.event_seq).toBe(1);
    stream.close();
  });

  it("backs off exponentially and resets after a good connect", () => {
    const stream = makeStream();
    stream.connect();
    expect(sources.length).toBe(1);

    // three failures: 1 s, 2 s, 4 s
    (sources[0] as FakeSource).onerror?.();
    expect(states).toEqual(["reconnecting"]);
    expect((sources[0] as FakeSource).closed).toBe(true);
    vi.advanceTimersByTime(999);
    expect(sources.length).toBe(1);
    vi.advanceTimersByTime(1);
    expect(sources.length).toBe(2);

    (sources[1] as FakeSource).onerror?.();
    vi.advanceTimersByTime(2000);
    expect(sources.length).toBe(3);

    (sources[2] as FakeSource).onerror?.();
    vi.advanceTimersByTime(4000);
    expect(sources.length).toBe(4);

    // a successful open resets the ladder to 1 s
    (sources[3] as FakeSource).onopen?.();
    (sources[3] as FakeSource).onerror?.();
    vi.advanceTimersByTime(1000);
    expect(sources.length).toBe(5);
    expect(states).toEqual([
      "reconnecting", "reconnecting", "reconnecting", "live", "reconnecting",
    ]);
    stream.close();
  });

  it("caps the retry delay at 15 s", () => {
    const stream = makeStream();
    stream.connect();
    for (let i = 0; i < 6; i += 1) {
      (sources[i] as FakeSource).onerror?.();
      vi.advanceTimersByTime(Math.min(1000 * 2 ** i, 15000));
      expect(sources.length).toBe(i + 2);
    }
    // past the cap the delay stays flat
    (sources[6] as FakeSource).onerror?.();
    vi.advanceTimersByTime(14999);
    expect(sources.length).toBe(7);
    vi.advanceTimersByTime(1);
    expect(sources.length).toBe(8);
    stream.close();
  });

  it("close stops reconnecting for good", () => {
    const stream = makeStream();
    stream.connect();
    (sources[0] as FakeSource).onerror?.();
    stream.close();
    vi.advanceTimersByTime(60000);
    expect(sources.length).toBe(1);

    // a late error after close must not resurrect the stream
    (sources[0] as FakeSource).onerror?.();
    vi.advanceTimersByTime(60000);
    expect(sources.length).toBe(1);
    expect((sources[0] as FakeSource).closed).toBe(true);
  });
});
