/**
 * Intent pad: in supervised mode the operator reveals the high-DoF action
 * they wanted. Grid scenarios use an 8-direction pad; arm scenarios turn an
 * end-effector nudge into a joint delta via least squares.
 */

import { dlsJointDelta, Point } from "./kinematics.js";

export const PAD_DIRECTIONS = [
  "up", "up-right", "right", "down-right", "down", "down-left", "left", "up-left",
] as const;

export type PadDirection = (typeof PAD_DIRECTIONS)[number];

const GRID_PAD: Record<PadDirection, [number, number]> = {
  "up": [0, 1],
  "up-right": [1, 1],
  "right": [1, 0],
  "down-right": [1, -1],
  "down": [0, -1],
  "down-left": [-1, -1],
  "left": [-1, 0],
  "up-left": [-1, 1],
};

/** Grid label: one lattice step in the chosen direction. */
export function gridPadAction(direction: PadDirection): number[] {
  return [...GRID_PAD[direction]];
}

/** Arm label: nudge the end effector one step in the chosen direction. */
export function armPadAction(direction: PadDirection, jointState: number[],
                             nudgeMagnitude: number = 0.08): number[] {
  const [dx, dy] = GRID_PAD[direction];
  const norm = Math.hypot(dx, dy);
  const nudge: Point = [(dx / norm) * nudgeMagnitude, (dy / norm) * nudgeMagnitude];
  return dlsJointDelta(jointState, nudge);
}

export function padAction(kind: "grid" | "arm", direction: PadDirection,
                          jointState: number[]): number[] {
  return kind === "grid" ? gridPadAction(direction) : armPadAction(direction, jointState);
}
