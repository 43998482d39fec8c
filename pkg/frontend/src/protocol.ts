/**
 * Wire protocol spoken with the session host: JSON text frames over a
 * WebSocket, one response event per client message, strictly increasing ids.
 */

export type Mode = "frozen" | "supervised";

export interface ResetMsg {
  id: number;
  type: "reset";
  scenario: string;
  model: string;
  mode: Mode;
  beta?: number;
  seed?: number;
}

export interface InputMsg {
  id: number;
  type: "input";
  h: number[];
}

export interface LabelMsg {
  id: number;
  type: "label";
  a: number[];
}

export interface ProbeMsg {
  id: number;
  type: "probe";
  h: number[];
}

export type ClientMsg = ResetMsg | InputMsg | LabelMsg | ProbeMsg;

export interface ResetAck {
  id: number;
  type: "ack";
  event: "reset";
  state: number[];
  scenario: string;
  mode: Mode;
  n_u: number;
  n_a: number;
  beta: number;
  alpha_t: number;
  lambda: number;
}

export interface StepEvent {
  id: number;
  type: "step";
  state: number[];
  a_hat: number[];
  lower: number[];
  upper: number[];
  U: number;
  flagged: boolean;
  alpha_t: number;
  lambda: number;
}

export interface LabelAck {
  id: number;
  type: "ack";
  event: "label";
  err: number;
  alpha_t: number;
  lambda: number;
}

export interface ProbeResult {
  id: number;
  type: "probe_result";
  U: number;
  a_hat: number[];
}

export interface ErrorEvent {
  id: number;
  type: "error";
  msg: string;
}

export type ServerEvent = ResetAck | StepEvent | LabelAck | ProbeResult | ErrorEvent;

/** Builds outgoing messages with strictly increasing ids. */
export class MessageFactory {
  private nextId = 1;

  private take(): number {
    return this.nextId++;
  }

  lastIssued(): number {
    return this.nextId - 1;
  }

  reset(scenario: string, model: string, mode: Mode, beta?: number, seed?: number): ResetMsg {
    const msg: ResetMsg = { id: this.take(), type: "reset", scenario, model, mode };
    if (beta !== undefined) msg.beta = beta;
    if (seed !== undefined) msg.seed = seed;
    return msg;
  }

  input(h: number[]): InputMsg {
    return { id: this.take(), type: "input", h: [...h] };
  }

  label(a: number[]): LabelMsg {
    return { id: this.take(), type: "label", a: [...a] };
  }

  probe(h: number[]): ProbeMsg {
    return { id: this.take(), type: "probe", h: [...h] };
  }
}

export function parseServerEvent(raw: string): ServerEvent {
  const parsed = JSON.parse(raw);
  if (typeof parsed.id !== "number" || typeof parsed.type !== "string") {
    throw new Error("malformed server event");
  }
  return parsed as ServerEvent;
}

export function isStep(ev: ServerEvent): ev is StepEvent {
  return ev.type === "step";
}
