/** Rolling traces of the calibration quantities shown in the cockpit. */

import { StepEvent } from "./protocol.js";

export class RollingTrace {
  private data: number[] = [];

  constructor(private readonly maxLen: number = 600) {}

  push(value: number): void {
    this.data.push(value);
    if (this.data.length > this.maxLen) {
      this.data.shift();
    }
  }

  values(): number[] {
    return [...this.data];
  }

  get length(): number {
    return this.data.length;
  }

  last(): number | undefined {
    return this.data[this.data.length - 1];
  }

  /** True when every sample equals the first (e.g. alpha in frozen mode). */
  isFlat(eps: number = 0): boolean {
    if (this.data.length === 0) return true;
    const first = this.data[0];
    return this.data.every((v) => Math.abs(v - first) <= eps);
  }
}

export class CockpitTraces {
  readonly u: RollingTrace;
  readonly alpha: RollingTrace;
  readonly lambda: RollingTrace;

  constructor(maxLen: number = 600) {
    this.u = new RollingTrace(maxLen);
    this.alpha = new RollingTrace(maxLen);
    this.lambda = new RollingTrace(maxLen);
  }

  pushStep(ev: StepEvent): void {
    this.u.push(ev.U);
    this.alpha.push(ev.alpha_t);
    this.lambda.push(ev.lambda);
  }
}
