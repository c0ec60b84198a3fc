// Server-sent event subscription with resume: reconnects from the last seen
// event index, so no event is lost or delivered twice across drops.

import type { SessionEvent } from "./types";

export interface EventSourceLike {
  onmessage: ((event: MessageEvent) => void) | null;
  onerror: ((event: Event) => void) | null;
  onopen: ((event: Event) => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;
export type Scheduler = (callback: () => void, delayMs: number) => void;

export interface StreamHandlers {
  onEvent(event: SessionEvent): void;
  onStatus(status: "connecting" | "open" | "reconnecting" | "closed"): void;
}

const defaultFactory: EventSourceFactory = (url) => new EventSource(url);
const defaultScheduler: Scheduler = (callback, delayMs) => {
  setTimeout(callback, delayMs);
};

export class SessionStream {
  private lastIndex = -1;
  private source: EventSourceLike | null = null;
  private closed = false;

  constructor(
    private readonly sessionId: string,
    private readonly handlers: StreamHandlers,
    private readonly factory: EventSourceFactory = defaultFactory,
    private readonly scheduler: Scheduler = defaultScheduler,
    private readonly retryMs = 1000,
  ) {}

  start(after = -1): void {
    this.lastIndex = after;
    this.handlers.onStatus("connecting");
    this.connect();
  }

  close(): void {
    this.closed = true;
    this.source?.close();
    this.source = null;
    this.handlers.onStatus("closed");
  }

  private connect(): void {
    if (this.closed) {
      return;
    }
    const url = `/api/sessions/${this.sessionId}/events?after=${this.lastIndex}`;
    const source = this.factory(url);
    this.source = source;
    source.onopen = () => this.handlers.onStatus("open");
    source.onmessage = (message) => {
      const event = JSON.parse(message.data as string) as SessionEvent;
      if (event.index <= this.lastIndex) {
        return; // duplicate after a reconnect race
      }
      this.lastIndex = event.index;
      this.handlers.onEvent(event);
      if (event.kind === "session_ended") {
        this.close();
      }
    };
    source.onerror = () => {
      if (this.closed) {
        return;
      }
      source.close();
      this.source = null;
      this.handlers.onStatus("reconnecting");
      this.scheduler(() => this.connect(), this.retryMs);
    };
  }
}
