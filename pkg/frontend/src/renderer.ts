/**
 * Canvas 2D rendering: the grid or arm scene, persistent high-uncertainty
 * markers along the travelled path, per-direction probe dots around the
 * joystick, and the U / alpha_t / lambda sparklines.
 */

import { armChain } from "./kinematics.js";
import { StepEvent } from "./protocol.js";
import { RollingTrace } from "./traces.js";

export const FLAG_COLOR = "#e08020";
const GRID_SIZE = 25;

export interface SceneInfo {
  kind: "grid" | "arm";
  obstacles?: Array<[number, number]>;
  goal?: [number, number];
}

export interface ProbeDot {
  direction: [number, number];
  u: number;
}

export function cellToPixel(cell: [number, number], canvasSize: number): [number, number] {
  const scale = canvasSize / GRID_SIZE;
  // scene y grows upward, canvas y downward
  return [(cell[0] + 0.5) * scale, canvasSize - (cell[1] + 0.5) * scale];
}

export function armToPixel(point: [number, number], canvasSize: number): [number, number] {
  const scale = canvasSize / 5.2; // workspace ~[-2.6, 2.6]
  return [canvasSize / 2 + point[0] * scale, canvasSize / 2 - point[1] * scale];
}

export class SceneRenderer {
  private flaggedPath: Array<[number, number]> = [];

  constructor(private readonly ctx: CanvasRenderingContext2D,
              private readonly size: number,
              private scene: SceneInfo) {}

  setScene(scene: SceneInfo): void {
    this.scene = scene;
    this.flaggedPath = [];
  }

  /** Redraws the scene for a step; flagged positions stay marked. */
  renderStep(ev: StepEvent): void {
    if (ev.flagged) {
      const pos = this.scene.kind === "grid"
        ? cellToPixel([ev.state[0], ev.state[1]], this.size)
        : armToPixel(armChain(ev.state).pop() as [number, number], this.size);
      this.flaggedPath.push(pos);
    }
    this.redraw(ev);
  }

  private redraw(ev: StepEvent): void {
    const ctx = this.ctx;
    ctx.clearRect(0, 0, this.size, this.size);
    if (this.scene.kind === "grid") {
      this.drawGrid(ev);
    } else {
      this.drawArm(ev);
    }
    ctx.fillStyle = FLAG_COLOR;
    for (const [x, y] of this.flaggedPath) {
      ctx.beginPath();
      ctx.arc(x, y, 4, 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  private drawGrid(ev: StepEvent): void {
    const ctx = this.ctx;
    const scale = this.size / GRID_SIZE;
    ctx.strokeStyle = "#ddd";
    for (let k = 0; k <= GRID_SIZE; k++) {
      ctx.beginPath();
      ctx.moveTo(k * scale, 0);
      ctx.lineTo(k * scale, this.size);
      ctx.stroke();
      ctx.beginPath();
      ctx.moveTo(0, k * scale);
      ctx.lineTo(this.size, k * scale);
      ctx.stroke();
    }
    ctx.fillStyle = "#444";
    for (const cell of this.scene.obstacles ?? []) {
      const [x, y] = cellToPixel(cell, this.size);
      ctx.fillRect(x - scale / 2, y - scale / 2, scale, scale);
    }
    if (this.scene.goal) {
      const [gx, gy] = cellToPixel(this.scene.goal, this.size);
      ctx.fillStyle = "#2a9d2a";
      ctx.fillRect(gx - scale / 2, gy - scale / 2, scale, scale);
    }
    const [rx, ry] = cellToPixel([ev.state[0], ev.state[1]], this.size);
    ctx.fillStyle = "#1565c0";
    ctx.beginPath();
    ctx.arc(rx, ry, scale * 0.45, 0, 2 * Math.PI);
    ctx.fill();
  }

  private drawArm(ev: StepEvent): void {
    const ctx = this.ctx;
    const chain = armChain(ev.state).map((p) => armToPixel(p, this.size));
    ctx.strokeStyle = "#1565c0";
    ctx.lineWidth = 5;
    ctx.beginPath();
    ctx.moveTo(chain[0][0], chain[0][1]);
    for (const [x, y] of chain.slice(1)) {
      ctx.lineTo(x, y);
    }
    ctx.stroke();
    ctx.lineWidth = 1;
    for (const [x, y] of chain) {
      ctx.fillStyle = "#333";
      ctx.beginPath();
      ctx.arc(x, y, 5, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}

/** Dot radius proportional to probed uncertainty, capped for layout. */
export function probeDotRadius(u: number, beta: number, maxRadius: number = 12): number {
  const scaled = (u / (2 * beta)) * maxRadius;
  return Math.max(2, Math.min(maxRadius, scaled));
}

export function drawProbeDots(ctx: CanvasRenderingContext2D, pad: { centerX: number; centerY: number; radius: number },
                              dots: ProbeDot[], beta: number): void {
  for (const dot of dots) {
    const x = pad.centerX + dot.direction[0] * pad.radius;
    const y = pad.centerY - dot.direction[1] * pad.radius;
    ctx.fillStyle = dot.u > beta ? FLAG_COLOR : "#888";
    ctx.beginPath();
    ctx.arc(x, y, probeDotRadius(dot.u, beta), 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function drawSparkline(ctx: CanvasRenderingContext2D, trace: RollingTrace,
                              x: number, y: number, w: number, h: number,
                              color: string): void {
  const values = trace.values();
  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(x, y, w, h);
  if (values.length < 2) return;
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  ctx.strokeStyle = color;
  ctx.beginPath();
  values.forEach((v, i) => {
    const px = x + (i / (values.length - 1)) * w;
    const py = y + h - ((v - lo) / span) * h;
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
}
