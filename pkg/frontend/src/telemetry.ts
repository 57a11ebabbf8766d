// 30 Hz head-pose uplink. Sends only in VR mode; track mode silences the
// sender completely rather than letting the server discard poses.

import { GimbalAngles, Mode, postTelemetry } from "./api";
import { PoseSource } from "./pose";

export const TELEMETRY_HZ = 30;

export class TelemetrySender {
  private timer: ReturnType<typeof setInterval> | null = null;
  // epoch-based so a reloaded console outranks its predecessor instead of
  // being dropped as stale forever
  private seq = Date.now();
  private inFlight = false;
  mode: Mode = "vr";
  sent = 0;
  stale = 0;
  rejected = 0;
  lastError: string | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly source: PoseSource,
  ) {}

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.tick(), 1000 / TELEMETRY_HZ);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  // one timer tick; public so tests can drive it without the clock
  async tick(): Promise<void> {
    if (this.mode !== "vr" || this.inFlight) return;
    const pose = this.source.sample();
    if (pose === null) return;
    this.inFlight = true;
    try {
      await this.send(pose);
    } finally {
      this.inFlight = false;
    }
  }

  private async send(pose: GimbalAngles): Promise<void> {
    const seq = this.seq++;
    let status: number;
    try {
      status = await postTelemetry(this.baseUrl, pose, seq);
    } catch (err) {
      this.lastError = String(err);
      return;
    }
    if (status === 204) {
      this.sent += 1;
      this.lastError = null;
    } else if (status === 409) {
      this.stale += 1; // stale by design, never retried
    } else {
      this.rejected += 1;
      this.lastError = `telemetry rejected (${status}); check the angle convention`;
    }
  }
}
