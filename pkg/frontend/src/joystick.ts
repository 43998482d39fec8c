/**
 * Virtual joystick math: pointer positions inside the pad become normalized
 * inputs in [-1, 1]^2, gesture samples are rate-limited, and a ring of unit
 * directions feeds the read-only uncertainty probes.
 */

export interface PadGeometry {
  centerX: number;
  centerY: number;
  radius: number;
}

export const MAX_INPUT_HZ = 15;

function clamp(v: number): number {
  return Math.max(-1, Math.min(1, v));
}

/** Clamp a raw vector into the unit box, coordinatewise. */
export function clampUnitBox(h: [number, number]): [number, number] {
  return [clamp(h[0]), clamp(h[1])];
}

/**
 * Pointer -> normalized input. Screen y grows downward while the scene's y
 * grows upward, so the vertical axis is flipped.
 */
export function normalizePointer(px: number, py: number, pad: PadGeometry): [number, number] {
  const raw: [number, number] = [
    (px - pad.centerX) / pad.radius,
    (pad.centerY - py) / pad.radius,
  ];
  return clampUnitBox(raw);
}

/** Center release: the neutral input. */
export function releaseInput(): [number, number] {
  return [0, 0];
}

/** Allows at most maxPerSecond samples; timestamps are caller-supplied ms. */
export class GestureThrottle {
  private readonly minGapMs: number;
  private lastSentMs: number | null = null;

  constructor(maxPerSecond: number = MAX_INPUT_HZ) {
    this.minGapMs = 1000 / maxPerSecond;
  }

  admit(nowMs: number): boolean {
    if (this.lastSentMs !== null && nowMs - this.lastSentMs < this.minGapMs) {
      return false;
    }
    this.lastSentMs = nowMs;
    return true;
  }
}

/** Unit directions probed while idle, for the per-direction uncertainty dots. */
export function probeRing(count: number = 8, magnitude: number = 1.0): [number, number][] {
  const ring: [number, number][] = [];
  for (let k = 0; k < count; k++) {
    const angle = (2 * Math.PI * k) / count;
    ring.push(clampUnitBox([magnitude * Math.cos(angle), magnitude * Math.sin(angle)]));
  }
  return ring;
}

/** Project a 2-D joystick sample onto a scenario's input width. */
export function fitToInputWidth(h: [number, number], nU: number): number[] {
  if (nU >= 2) {
    return [h[0], h[1], ...new Array(Math.max(0, nU - 2)).fill(0)];
  }
  return [h[0]];
}
