// Head-pose sources and the conversion to the gimbal's convention:
// positive yaw turns the view right, positive pitch looks up, roll spins
// about the viewing axis, everything in degrees within +-90.
//
// Device orientation depends on how the phone sits in the headset, so
// poses are always taken relative to a captured neutral ("set neutral"
// button). The raw mapping assumes the screen faces the user: alpha
// (compass) drives yaw with flipped sign, beta drives pitch, gamma rolls.

import { GimbalAngles } from "./api";

export interface PoseSource {
  readonly name: string;
  // null while the source has produced nothing yet
  sample(): GimbalAngles | null;
  setNeutral(): void;
}

export const POSE_LIMIT_DEG = 90;

export function wrapDeg(angle: number): number {
  let a = angle % 360;
  if (a >= 180) a -= 360;
  if (a < -180) a += 360;
  return a;
}

export function clampPose(pose: GimbalAngles): GimbalAngles {
  const clip = (v: number) =>
    Math.min(POSE_LIMIT_DEG, Math.max(-POSE_LIMIT_DEG, v));
  return { yaw: clip(pose.yaw), pitch: clip(pose.pitch), roll: clip(pose.roll) };
}

export function relativeTo(
  raw: GimbalAngles,
  neutral: GimbalAngles,
): GimbalAngles {
  return clampPose({
    yaw: wrapDeg(raw.yaw - neutral.yaw),
    pitch: wrapDeg(raw.pitch - neutral.pitch),
    roll: wrapDeg(raw.roll - neutral.roll),
  });
}

export function orientationToRaw(
  alpha: number,
  beta: number,
  gamma: number,
): GimbalAngles {
  return { yaw: wrapDeg(-alpha), pitch: wrapDeg(beta), roll: wrapDeg(gamma) };
}

export class OrientationSource implements PoseSource {
  readonly name = "device orientation";
  private raw: GimbalAngles | null = null;
  private neutral: GimbalAngles = { yaw: 0, pitch: 0, roll: 0 };

  constructor(target: Pick<Window, "addEventListener"> = window) {
    target.addEventListener("deviceorientation", (event) => {
      const e = event as DeviceOrientationEvent;
      if (e.alpha === null || e.beta === null || e.gamma === null) return;
      this.raw = orientationToRaw(e.alpha, e.beta, e.gamma);
    });
  }

  sample(): GimbalAngles | null {
    return this.raw === null ? null : relativeTo(this.raw, this.neutral);
  }

  setNeutral(): void {
    if (this.raw !== null) this.neutral = { ...this.raw };
  }
}

// Fallback when there is no sensor: sliders and arrow-key nudges write
// into this source; it emits the same telemetry shape as the real one.
export class ManualSource implements PoseSource {
  readonly name = "manual sliders";
  private pose: GimbalAngles = { yaw: 0, pitch: 0, roll: 0 };

  sample(): GimbalAngles {
    return clampPose(this.pose);
  }

  set(axis: keyof GimbalAngles, value: number): void {
    this.pose = { ...this.pose, [axis]: value };
  }

  nudge(axis: keyof GimbalAngles, delta: number): void {
    this.set(axis, this.pose[axis] + delta);
  }

  get(): GimbalAngles {
    return { ...this.pose };
  }

  setNeutral(): void {
    this.pose = { yaw: 0, pitch: 0, roll: 0 };
  }
}
