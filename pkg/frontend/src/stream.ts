// SSE client for a session's derived-record stream. Reconnects with
// exponential backoff and reports every status change so the HUD can show
// "reconnecting" instead of silently going stale.

import type { FeedRecord } from "./types.js";

// Structural subset of EventSource, so tests can inject a fake.
export type EventSourceLike = {
  addEventListener(type: string, listener: (ev: MessageEvent) => void): void;
  close(): void;
};

export type EventSourceFactory = (url: string) => EventSourceLike;

export type StreamHandlers = {
  onRecord(record: FeedRecord): void;
  onStatus(status: string): void;
  onEnd(): void;
};

export const BASE_RETRY_MS = 1000;
export const MAX_RETRY_MS = 15000;

export class SessionStream {
  private source: EventSourceLike | null = null;
  private attempt = 0;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private readonly url: string,
    private readonly handlers: StreamHandlers,
    private readonly factory: EventSourceFactory = (u) =>
      new EventSource(u) as EventSourceLike
  ) {}

  retryDelayMs(): number {
    return Math.min(BASE_RETRY_MS * 2 ** this.attempt, MAX_RETRY_MS);
  }

  connect(): void {
    if (this.stopped) return;
    this.handlers.onStatus(this.attempt === 0 ? "connecting" : "reconnecting");
    const source = this.factory(this.url);
    this.source = source;

    source.addEventListener("open", () => {
      this.attempt = 0;
      this.handlers.onStatus("live");
    });
    source.addEventListener("message", (ev) => {
      this.handlers.onRecord(JSON.parse(ev.data) as FeedRecord);
    });
    source.addEventListener("end", () => {
      this.close();
      this.handlers.onStatus("ended");
      this.handlers.onEnd();
    });
    source.addEventListener("error", () => {
      if (this.stopped) return;
      source.close();
      this.source = null;
      this.handlers.onStatus("reconnecting");
      const delay = this.retryDelayMs();
      this.attempt += 1;
      this.retryTimer = setTimeout(() => {
        this.retryTimer = null;
        this.connect();
      }, delay);
    });
  }

  close(): void {
    this.stopped = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.source?.close();
    this.source = null;
  }
}
