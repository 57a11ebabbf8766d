// MJPEG stream client: one fetch connection pumped through the multipart
// parser, with automatic reconnect. Presentation is left to callbacks so
// the transport also runs headless (tests, latency probes).

import { MultipartParser, StreamPart } from "./multipart";

export interface StreamEvents {
  onPart: (part: StreamPart, arrivedMs: number) => void;
  onConnect?: () => void;
  // reason is surfaced in the UI banner
  onDrop?: (reason: string) => void;
}

const BACKOFF_MIN_MS = 250;
const BACKOFF_MAX_MS = 4000;

export class StreamClient {
  private stopped = false;
  private backoffMs = BACKOFF_MIN_MS;
  lastSeq = -1;
  partsSeen = 0;

  constructor(
    private readonly baseUrl: string,
    private readonly events: StreamEvents,
  ) {}

  start(): void {
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      try {
        await this.consumeOnce();
        if (!this.stopped) this.events.onDrop?.("stream ended");
      } catch (err) {
        if (!this.stopped) this.events.onDrop?.(String(err));
      }
      if (this.stopped) return;
      await sleep(this.backoffMs);
      this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
    }
  }

  private async consumeOnce(): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/stream`);
    if (!resp.ok || !resp.body) throw new Error(`stream ${resp.status}`);
    this.events.onConnect?.();
    this.backoffMs = BACKOFF_MIN_MS;

    const parser = new MultipartParser();
    const reader = resp.body.getReader();
    try {
      for (;;) {
        const { value, done } = await reader.read();
        if (done) return;
        if (!value) continue;
        for (const part of parser.push(value)) {
          const seq = Number(part.headers["X-Seq"]);
          if (seq <= this.lastSeq) {
            throw new Error(`X-Seq went backwards: ${this.lastSeq} -> ${seq}`);
          }
          this.lastSeq = seq;
          this.partsSeen += 1;
          this.events.onPart(part, performance.now());
        }
        if (this.stopped) return;
      }
    } finally {
      await reader.cancel().catch(() => undefined);
    }
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
