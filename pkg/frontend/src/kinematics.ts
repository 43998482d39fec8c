/**
 * Client-side replica of the planar 3-link arm math, used to draw the
 * linkage from joint states and to turn intent-pad end-effector nudges into
 * joint-delta labels (damped least squares).
 */

export const LINK_LENGTHS = [1.0, 0.8, 0.6];
export const DLS_DAMPING = 0.1;

export type Point = [number, number];

/** Positions of every joint plus the end effector, base at the origin. */
export function armChain(theta: number[], lengths: number[] = LINK_LENGTHS): Point[] {
  const points: Point[] = [[0, 0]];
  let angle = 0;
  let x = 0;
  let y = 0;
  for (let i = 0; i < lengths.length; i++) {
    angle += theta[i];
    x += lengths[i] * Math.cos(angle);
    y += lengths[i] * Math.sin(angle);
    points.push([x, y]);
  }
  return points;
}

export function armFk(theta: number[], lengths: number[] = LINK_LENGTHS): Point {
  const chain = armChain(theta, lengths);
  return chain[chain.length - 1];
}

/** 2x3 Jacobian of the end effector w.r.t. the joint angles. */
export function armJacobian(theta: number[], lengths: number[] = LINK_LENGTHS): number[][] {
  const cumulative: number[] = [];
  let angle = 0;
  for (let i = 0; i < lengths.length; i++) {
    angle += theta[i];
    cumulative.push(angle);
  }
  const row0: number[] = [];
  const row1: number[] = [];
  for (let j = 0; j < lengths.length; j++) {
    let dx = 0;
    let dy = 0;
    for (let i = j; i < lengths.length; i++) {
      dx -= lengths[i] * Math.sin(cumulative[i]);
      dy += lengths[i] * Math.cos(cumulative[i]);
    }
    row0.push(dx);
    row1.push(dy);
  }
  return [row0, row1];
}

/**
 * Least-squares joint delta realizing a small end-effector nudge:
 * J^T (J J^T + damping^2 I)^-1 nudge, the 2x2 system solved in closed form.
 */
export function dlsJointDelta(theta: number[], nudge: Point,
                              damping: number = DLS_DAMPING): number[] {
  const jac = armJacobian(theta);
  const a = dot(jac[0], jac[0]) + damping * damping;
  const b = dot(jac[0], jac[1]);
  const c = dot(jac[1], jac[1]) + damping * damping;
  const det = a * c - b * b;
  const ex = (c * nudge[0] - b * nudge[1]) / det;
  const ey = (a * nudge[1] - b * nudge[0]) / det;
  return jac[0].map((v, j) => v * ex + jac[1][j] * ey);
}

function dot(u: number[], v: number[]): number {
  let s = 0;
  for (let i = 0; i < u.length; i++) s += u[i] * v[i];
  return s;
}
