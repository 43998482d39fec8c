/**
 * Session client: outgoing messages carry strictly increasing ids (via the
 * shared MessageFactory) and incoming frames are funneled through one ordered
 * queue, so the rendered state always corresponds to the highest-id step.
 */

import { ClientMsg, MessageFactory, parseServerEvent, ServerEvent, isStep } from "./protocol.js";

export type ConnectionStatus = "idle" | "connecting" | "open" | "closed";

export interface ClientHooks {
  onEvent: (ev: ServerEvent) => void;
  onStatus?: (status: ConnectionStatus) => void;
}

/** Parses frames and dispatches them in arrival order, tracking the newest step. */
export class OrderedDispatcher {
  private queue: ServerEvent[] = [];
  private draining = false;
  private highestStepId = -1;

  constructor(private readonly onEvent: (ev: ServerEvent) => void) {}

  feed(rawFrame: string): void {
    this.queue.push(parseServerEvent(rawFrame));
    this.drain();
  }

  private drain(): void {
    if (this.draining) return;
    this.draining = true;
    try {
      while (this.queue.length > 0) {
        const ev = this.queue.shift()!;
        if (isStep(ev)) {
          if (ev.id <= this.highestStepId) {
            continue; // stale frame; the rendered state must track the newest step
          }
          this.highestStepId = ev.id;
        }
        this.onEvent(ev);
      }
    } finally {
      this.draining = false;
    }
  }

  newestStepId(): number {
    return this.highestStepId;
  }
}

export class CockpitClient {
  readonly factory = new MessageFactory();
  private socket: WebSocket | null = null;
  private dispatcher: OrderedDispatcher;
  private status: ConnectionStatus = "idle";

  constructor(private readonly url: string, private readonly hooks: ClientHooks) {
    this.dispatcher = new OrderedDispatcher(hooks.onEvent);
  }

  connect(): void {
    this.setStatus("connecting");
    this.socket = new WebSocket(this.url);
    this.socket.onopen = () => this.setStatus("open");
    this.socket.onclose = () => this.setStatus("closed");
    this.socket.onerror = () => this.setStatus("closed");
    this.socket.onmessage = (frame: MessageEvent) => this.dispatcher.feed(String(frame.data));
  }

  /** Queues nothing when disconnected; the UI shows the reconnect state. */
  send(msg: ClientMsg): boolean {
    if (this.status !== "open" || this.socket === null) {
      return false;
    }
    this.socket.send(JSON.stringify(msg));
    return true;
  }

  currentStatus(): ConnectionStatus {
    return this.status;
  }

  close(): void {
    this.socket?.close();
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.hooks.onStatus?.(status);
  }
}
