// Typed wrappers over the sentry HTTP surface. Everything the console
// knows about the server goes through this file.

export type Mode = "vr" | "track";

export interface GimbalAngles {
  yaw: number;
  pitch: number;
  roll: number;
}

export interface StatusDetection {
  label: string;
  confidence: number;
  bbox: [number, number, number, number];
  distance_m: number | null;
}

export interface StatusDoc {
  seq: number;
  mode: Mode;
  target: string | null;
  gimbal: GimbalAngles;
  zoom: number;
  fps_1s: number;
  latency_ms_p50_p95: { p50: number | null; p95: number | null };
  detections: StatusDetection[];
}

export interface SessionState {
  baseUrl: string;
  mode: Mode;
  target: string;
  zoom: number;
  nextSeq: number;
  connected: boolean;
  lastStatus: StatusDoc | null;
}

export const ZOOM_MIN = 1.0;
export const ZOOM_MAX = 1.6;

export function clampZoom(zoom: number): number {
  if (!Number.isFinite(zoom)) return ZOOM_MIN;
  return Math.min(ZOOM_MAX, Math.max(ZOOM_MIN, zoom));
}

export function newSession(baseUrl: string): SessionState {
  return {
    baseUrl,
    mode: "vr",
    target: "person",
    zoom: 1.0,
    nextSeq: 0,
    connected: false,
    lastStatus: null,
  };
}

export async function getStatus(baseUrl: string): Promise<StatusDoc> {
  const resp = await fetch(`${baseUrl}/status`);
  if (!resp.ok) throw new Error(`status ${resp.status}`);
  return (await resp.json()) as StatusDoc;
}

// 204 applied, 409 stale (counted by the caller, never retried)
export async function postTelemetry(
  baseUrl: string,
  pose: GimbalAngles,
  seq: number,
): Promise<number> {
  const resp = await fetch(`${baseUrl}/telemetry`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({
      yaw: pose.yaw,
      pitch: pose.pitch,
      roll: pose.roll,
      seq,
      t_ms: Date.now(),
    }),
  });
  return resp.status;
}

export async function postMode(
  baseUrl: string,
  mode: Mode,
  target: string,
  zoom: number,
): Promise<void> {
  const body: Record<string, unknown> = { mode, zoom: clampZoom(zoom) };
  if (mode === "track") body.target = target;
  const resp = await fetch(`${baseUrl}/mode`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (resp.status !== 204) {
    const text = await resp.text();
    throw new Error(`mode rejected (${resp.status}): ${text}`);
  }
}
