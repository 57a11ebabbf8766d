import { describe, expect, it } from "vitest";
import {
  ManualSource,
  OrientationSource,
  clampPose,
  orientationToRaw,
  relativeTo,
  wrapDeg,
} from "../src/pose";

describe("angle helpers", () => {
  it("wraps into [-180, 180)", () => {
    expect(wrapDeg(0)).toBe(0);
    expect(wrapDeg(180)).toBe(-180);
    expect(wrapDeg(-180)).toBe(-180);
    expect(wrapDeg(350)).toBe(-10);
    expect(wrapDeg(-350)).toBe(10);
    expect(wrapDeg(725)).toBe(5);
  });

  it("clamps every axis to +-90", () => {
    expect(clampPose({ yaw: 120, pitch: -95, roll: 3 })).toEqual({
      yaw: 90,
      pitch: -90,
      roll: 3,
    });
  });
});

describe("neutral calibration", () => {
  it("subtracts the neutral with wraparound", () => {
    // compass crossing: raw 355 vs neutral 350 is +5, not -345
    const raw = orientationToRaw(355, 20, 5);
    const neutral = orientationToRaw(350, 20, 5);
    const rel = relativeTo(raw, neutral);
    expect(rel.yaw).toBeCloseTo(-5, 10); // alpha grows counterclockwise
    expect(rel.pitch).toBe(0);
    expect(rel.roll).toBe(0);
  });

  it("turning right from any mounting gives positive yaw", () => {
    // alpha decreases when the device turns clockwise (to the right)
    for (const start of [0, 90, 359]) {
      const neutral = orientationToRaw(start, 0, 0);
      const turned = orientationToRaw(start - 15, 0, 0);
      expect(relativeTo(turned, neutral).yaw).toBeCloseTo(15, 10);
    }
  });
});

describe("OrientationSource", () => {
  function fakeWindow() {
    const listeners: Array<(e: Event) => void> = [];
    return {
      addEventListener: (_type: string, fn: (e: Event) => void) => {
        listeners.push(fn);
      },
      fire(alpha: number | null, beta: number | null, gamma: number | null) {
        for (const fn of listeners) {
          fn({ alpha, beta, gamma } as unknown as Event);
        }
      },
    };
  }

  it("is null before the first event and tracks after", () => {
    const w = fakeWindow();
    const src = new OrientationSource(w);
    expect(src.sample()).toBeNull();
    w.fire(10, 5, 0);
    expect(src.sample()).toEqual({ yaw: -10, pitch: 5, roll: 0 });
  });

  it("ignores events with null axes", () => {
    const w = fakeWindow();
    const src = new OrientationSource(w);
    w.fire(null, null, null);
    expect(src.sample()).toBeNull();
  });

  it("set neutral zeroes the current pose", () => {
    const w = fakeWindow();
    const src = new OrientationSource(w);
    w.fire(33, -12, 4);
    src.setNeutral();
    expect(src.sample()).toEqual({ yaw: 0, pitch: 0, roll: 0 });
    w.fire(23, -12, 4);
    expect(src.sample()!.yaw).toBeCloseTo(10, 10);
  });
});

describe("ManualSource", () => {
  it("sets, nudges, and clamps", () => {
    const src = new ManualSource();
    src.set("yaw", 10);
    src.nudge("yaw", 5);
    expect(src.sample().yaw).toBe(15);
    src.set("pitch", 500);
    expect(src.sample().pitch).toBe(90);
    src.setNeutral();
    expect(src.sample()).toEqual({ yaw: 0, pitch: 0, roll: 0 });
  });
});
