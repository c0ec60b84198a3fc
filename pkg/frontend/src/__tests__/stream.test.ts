import { describe, expect, it } from "vitest";

import { SessionStream, type EventSourceLike } from "../stream";
import type { SessionEvent } from "../types";

class FakeSource implements EventSourceLike {
  onmessage: ((event: MessageEvent) => void) | null = null;
  onerror: ((event: Event) => void) | null = null;
  onopen: ((event: Event) => void) | null = null;
  closed = false;

  constructor(readonly url: string) {}

  close(): void {
    this.closed = true;
  }

  emit(event: SessionEvent): void {
    this.onmessage?.({ data: JSON.stringify(event) } as MessageEvent);
  }

  fail(): void {
    this.onerror?.(new Event("error"));
  }
}

function harness() {
  const sources: FakeSource[] = [];
  const received: SessionEvent[] = [];
  const statuses: string[] = [];
  const pending: (() => void)[] = [];
  const stream = new SessionStream(
    "s1",
    {
      onEvent: (event) => received.push(event),
      onStatus: (status) => statuses.push(status),
    },
    (url) => {
      const source = new FakeSource(url);
      sources.push(source);
      return source;
    },
    (callback) => pending.push(callback),
    5,
  );
  const runTimers = () => {
    while (pending.length > 0) {
      pending.shift()!();
    }
  };
  return { stream, sources, received, statuses, runTimers };
}

function event(index: number, kind: SessionEvent["kind"] = "card_played"): SessionEvent {
  return { index, kind, payload: { card_id: index, pile: 1 }, round: 1 };
}

describe("SessionStream", () => {
  it("subscribes from the requested index", () => {
    const { stream, sources } = harness();
    stream.start(-1);
    expect(sources[0].url).toBe("/api/sessions/s1/events?after=-1");
  });

  it("delivers events and tracks the last index", () => {
    const { stream, sources, received } = harness();
    stream.start(-1);
    sources[0].emit(event(0));
    sources[0].emit(event(1));
    expect(received.map((e) => e.index)).toEqual([0, 1]);
  });

  it("reconnects from the last seen index without duplicates", () => {
    const { stream, sources, received, statuses, runTimers } = harness();
    stream.start(-1);
    sources[0].emit(event(0));
    sources[0].emit(event(1));
    sources[0].fail();
    expect(statuses).toContain("reconnecting");
    runTimers();
    expect(sources).toHaveLength(2);
    expect(sources[1].url).toBe("/api/sessions/s1/events?after=1");
    sources[1].emit(event(1)); // replayed by a racy server
    sources[1].emit(event(2));
    expect(received.map((e) => e.index)).toEqual([0, 1, 2]);
  });

  it("closes itself after session_ended", () => {
    const { stream, sources, statuses } = harness();
    stream.start(-1);
    sources[0].emit(event(0));
    sources[0].emit({ index: 1, kind: "session_ended", payload: {} as never, round: 1 });
    expect(sources[0].closed).toBe(true);
    expect(statuses[statuses.length - 1]).toBe("closed");
  });

  it("stops reconnecting once closed", () => {
    const { stream, sources, runTimers } = harness();
    stream.start(-1);
    stream.close();
    sources[0].fail();
    runTimers();
    expect(sources).toHaveLength(1);
  });
});
