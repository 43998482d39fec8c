/** Cockpit wiring: DOM, socket, joystick, probes, traces, intent pad. */

import { CockpitClient } from "./client.js";
import { GestureThrottle, fitToInputWidth, normalizePointer, PadGeometry, probeRing } from "./joystick.js";
import { PAD_DIRECTIONS, PadDirection, padAction } from "./intentpad.js";
import { ServerEvent, StepEvent } from "./protocol.js";
import { drawProbeDots, drawSparkline, ProbeDot, SceneRenderer } from "./renderer.js";
import { CockpitTraces } from "./traces.js";

interface ScenarioEntry {
  id: string;
  default_beta: number;
  env: { kind: "grid" | "arm"; n_u: number; n_a: number; obstacles?: [number, number][]; goal?: [number, number] };
}

const $ = (id: string) => document.getElementById(id)!;

class CockpitApp {
  private client: CockpitClient | null = null;
  private traces = new CockpitTraces();
  private renderer: SceneRenderer | null = null;
  private scenario: ScenarioEntry | null = null;
  private mode: "frozen" | "supervised" = "frozen";
  private jointState: number[] = [];
  private pendingLabel = false;
  private probeDots: ProbeDot[] = [];
  private probeDirections = probeRing(8);
  private probeIndex = 0;
  private probeIds = new Map<number, [number, number]>();
  private throttle = new GestureThrottle();
  private dragging = false;
  private lastInputAt = 0;

  private readonly pad: PadGeometry = { centerX: 110, centerY: 110, radius: 80 };

  async start(): Promise<void> {
    const scenarios: ScenarioEntry[] = await (await fetch("/scenarios")).json();
    const models: string[] = await (await fetch("/models")).json();
    const scenarioSelect = $("scenario") as HTMLSelectElement;
    const modelSelect = $("model") as HTMLSelectElement;
    for (const entry of scenarios) {
      scenarioSelect.add(new Option(entry.id, entry.id));
    }
    for (const name of models) {
      modelSelect.add(new Option(name, name));
    }
    (window as any).__scenarios = scenarios;
    $("connect").addEventListener("click", () => this.connect(scenarios));
    this.bindJoystick();
    this.bindIntentPad();
    setInterval(() => this.probeTick(), 125); // 8 probe directions per idle second
    setInterval(() => this.drawOverlays(), 200);
  }

  private connect(scenarios: ScenarioEntry[]): void {
    const scenarioId = ($("scenario") as HTMLSelectElement).value;
    const model = ($("model") as HTMLSelectElement).value;
    this.mode = ($("mode") as HTMLSelectElement).value as "frozen" | "supervised";
    this.scenario = scenarios.find((s) => s.id === scenarioId) ?? null;
    if (!this.scenario) return;
    const canvas = $("scene") as HTMLCanvasElement;
    this.renderer = new SceneRenderer(canvas.getContext("2d")!, canvas.width, {
      kind: this.scenario.env.kind,
      obstacles: this.scenario.env.obstacles,
      goal: this.scenario.env.goal,
    });
    this.traces = new CockpitTraces();
    const url = `ws://${location.host}/ws`;
    this.client?.close();
    this.client = new CockpitClient(url, {
      onEvent: (ev) => this.onEvent(ev),
      onStatus: (status) => {
        $("status").textContent = status;
        if (status === "open") {
          this.client!.send(this.client!.factory.reset(
            scenarioId, model, this.mode, this.scenario!.default_beta));
        }
      },
    });
    this.client.connect();
  }

  private onEvent(ev: ServerEvent): void {
    if (ev.type === "step") {
      this.onStep(ev);
    } else if (ev.type === "probe_result") {
      const direction = this.probeIds.get(ev.id);
      if (direction) {
        this.probeIds.delete(ev.id);
        this.probeDots = this.probeDots.filter((d) => d.direction !== direction).slice(-7);
        this.probeDots.push({ direction, u: ev.U });
      }
    } else if (ev.type === "ack" && (ev as any).event === "label") {
      this.pendingLabel = false;
      $("lastack").textContent =
        `err=${(ev as any).err} alpha=${(ev as any).alpha_t.toFixed(4)} lambda=${(ev as any).lambda.toFixed(3)}`;
      this.traces.alpha.push((ev as any).alpha_t);
      this.traces.lambda.push((ev as any).lambda);
    } else if (ev.type === "ack" && (ev as any).event === "reset") {
      this.jointState = (ev as any).state;
      $("banner").classList.remove("active");
    } else if (ev.type === "error") {
      this.toast((ev as any).msg);
    }
  }

  private onStep(ev: StepEvent): void {
    this.jointState = ev.state;
    this.traces.pushStep(ev);
    this.renderer?.renderStep(ev);
    $("banner").classList.toggle("active", ev.flagged);
    $("readout").textContent =
      `U=${ev.U.toFixed(3)} alpha=${ev.alpha_t.toFixed(4)} lambda=${ev.lambda.toFixed(3)}`;
    if (this.mode === "supervised") {
      this.pendingLabel = true;
    }
  }

  private bindJoystick(): void {
    const padCanvas = $("joystick") as HTMLCanvasElement;
    const sample = (e: PointerEvent) => {
      if (!this.dragging || !this.client || !this.scenario) return;
      if (this.mode === "supervised" && this.pendingLabel) return;
      const now = performance.now();
      if (!this.throttle.admit(now)) return;
      const rect = padCanvas.getBoundingClientRect();
      const h = normalizePointer(e.clientX - rect.left, e.clientY - rect.top, this.pad);
      this.lastInputAt = now;
      this.client.send(this.client.factory.input(fitToInputWidth(h, this.scenario.env.n_u)));
    };
    padCanvas.addEventListener("pointerdown", (e) => { this.dragging = true; sample(e); });
    padCanvas.addEventListener("pointermove", sample);
    window.addEventListener("pointerup", () => { this.dragging = false; });
  }

  private bindIntentPad(): void {
    const container = $("intentpad");
    for (const direction of PAD_DIRECTIONS) {
      const button = document.createElement("button");
      button.textContent = direction;
      button.addEventListener("click", () => this.sendLabel(direction));
      container.appendChild(button);
    }
  }

  private sendLabel(direction: PadDirection): void {
    if (!this.client || !this.scenario || this.mode !== "supervised" || !this.pendingLabel) {
      this.toast("no pending step to label");
      return;
    }
    const action = padAction(this.scenario.env.kind, direction, this.jointState);
    this.client.send(this.client.factory.label(action));
  }

  private probeTick(): void {
    if (!this.client || !this.scenario || this.dragging) return;
    if (performance.now() - this.lastInputAt < 1000) return; // probe only while idle
    const direction = this.probeDirections[this.probeIndex % this.probeDirections.length];
    this.probeIndex += 1;
    const msg = this.client.factory.probe(fitToInputWidth(direction, this.scenario.env.n_u));
    if (this.client.send(msg)) {
      this.probeIds.set(msg.id, direction);
    }
  }

  private drawOverlays(): void {
    const padCanvas = $("joystick") as HTMLCanvasElement;
    const ctx = padCanvas.getContext("2d")!;
    ctx.clearRect(0, 0, padCanvas.width, padCanvas.height);
    ctx.strokeStyle = "#888";
    ctx.beginPath();
    ctx.arc(this.pad.centerX, this.pad.centerY, this.pad.radius, 0, 2 * Math.PI);
    ctx.stroke();
    drawProbeDots(ctx, this.pad, this.probeDots, this.scenario?.default_beta ?? 1.0);

    const traceCanvas = $("traces") as HTMLCanvasElement;
    const tctx = traceCanvas.getContext("2d")!;
    tctx.clearRect(0, 0, traceCanvas.width, traceCanvas.height);
    drawSparkline(tctx, this.traces.u, 5, 5, traceCanvas.width - 10, 50, "#e08020");
    drawSparkline(tctx, this.traces.alpha, 5, 65, traceCanvas.width - 10, 50, "#1565c0");
    drawSparkline(tctx, this.traces.lambda, 5, 125, traceCanvas.width - 10, 50, "#2a9d2a");
  }

  private toast(message: string): void {
    const el = $("toast");
    el.textContent = message;
    el.classList.add("visible");
    setTimeout(() => el.classList.remove("visible"), 2500);
  }
}

new CockpitApp().start().catch((err) => {
  document.body.textContent = `cockpit failed to start: ${err}`;
});
