/**
 * Canonical scripted sessions: deterministic message logs produced by the
 * same joystick/intent-pad code paths the interactive cockpit uses. The
 * committed fixture built from these scripts is replayed against the session
 * host to pin down protocol fidelity.
 */

import { GestureThrottle, fitToInputWidth, normalizePointer, PadGeometry, probeRing, releaseInput } from "./joystick.js";
import { gridPadAction } from "./intentpad.js";
import { ClientMsg, MessageFactory } from "./protocol.js";

const PAD: PadGeometry = { centerX: 100, centerY: 100, radius: 80 };

/** A drag gesture: right, arc up, overshoot past the rim, release. */
function gesturePath(): Array<[number, number]> {
  const points: Array<[number, number]> = [];
  for (let i = 1; i <= 8; i++) {
    points.push([100 + i * 10, 100]); // straight right to full tilt
  }
  for (let i = 1; i <= 6; i++) {
    points.push([180, 100 - i * 15]); // sweep upward, leaving the rim
  }
  points.push([240, -40]); // far outside: must clamp to the unit box
  return points;
}

export function frozenSessionScript(nU: number = 1): ClientMsg[] {
  const factory = new MessageFactory();
  const throttle = new GestureThrottle();
  const messages: ClientMsg[] = [
    factory.reset("grid-precision", "grid-precision", "frozen", 1.0, 0),
  ];
  let clockMs = 0;
  for (const [px, py] of gesturePath()) {
    clockMs += 40; // 25 Hz pointer samples, throttled down to <= 15 Hz
    if (!throttle.admit(clockMs)) {
      continue;
    }
    const h = normalizePointer(px, py, PAD);
    messages.push(factory.input(fitToInputWidth(h, nU)));
  }
  messages.push(factory.input(fitToInputWidth(releaseInput(), nU)));
  for (const direction of probeRing(8)) {
    messages.push(factory.probe(fitToInputWidth(direction, nU)));
  }
  return messages;
}

export function supervisedSessionScript(nU: number = 1): ClientMsg[] {
  const factory = new MessageFactory();
  const messages: ClientMsg[] = [
    factory.reset("grid-precision", "grid-precision", "supervised", 1.0, 0),
  ];
  const pads = ["right", "right", "up-right", "right", "down-right", "right"] as const;
  for (const direction of pads) {
    messages.push(factory.input(fitToInputWidth([1.0, 0.0], nU)));
    messages.push(factory.label(gridPadAction(direction)));
  }
  return messages;
}

export function scriptedLogs(): { frozen: ClientMsg[]; supervised: ClientMsg[] } {
  return { frozen: frozenSessionScript(), supervised: supervisedSessionScript() };
}
