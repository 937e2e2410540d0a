/**
 * Websocket controller: owns the socket, the view model, and the recorded
 * message log. One adapt may be in flight at a time; commitMovesAndAdapt
 * sends the staged moves and (outside manual mode) queues the adapt to fire
 * as soon as the server acknowledges the moves with a state frame.
 */

import {
  applyServer,
  canAdapt,
  initialView,
  pendingCount,
  setConnected,
  type ViewModel,
} from "./state.js";
import { parseMessage, PROTOCOL_VERSION, type ModeName, type Vec3, type WireMessage } from "./protocol.js";

/** Minimal socket surface so tests can substitute a scripted fake. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  set onmessage(handler: (event: { data: string }) => void);
  set onopen(handler: () => void);
  set onclose(handler: () => void);
}

export interface LogEntry {
  direction: "send" | "recv";
  message: WireMessage;
}

export class StudioClient {
  view: ViewModel = initialView();
  log: LogEntry[] = [];

  private socket: SocketLike | null = null;
  private adaptQueued: [number, number][] | null = null;
  private listeners: ((view: ViewModel) => void)[] = [];

  onChange(listener: (view: ViewModel) => void): void {
    this.listeners.push(listener);
  }

  private update(view: ViewModel): void {
    this.view = view;
    for (const listener of this.listeners) listener(view);
  }

  attach(socket: SocketLike): void {
    this.socket = socket;
    socket.onopen = () => {
      this.update(setConnected(this.view, true));
      this.hello();
    };
    socket.onclose = () => {
      this.socket = null;
      this.update(setConnected(this.view, false));
    };
    socket.onmessage = (event) => this.receive(event.data);
  }

  get connected(): boolean {
    return this.socket !== null && this.view.connected;
  }

  send(message: WireMessage): void {
    if (!this.socket) throw new Error("not connected");
    this.log.push({ direction: "send", message });
    this.socket.send(JSON.stringify(message));
  }

  private receive(data: string): void {
    let message: WireMessage;
    try {
      message = parseMessage(data);
    } catch (error) {
      this.update({ ...this.view, warning: String(error) });
      return;
    }
    this.log.push({ direction: "recv", message });
    this.update(applyServer(this.view, message));
    if (message.kind === "state" && this.adaptQueued !== null) {
      const pairs = this.adaptQueued;
      this.adaptQueued = null;
      this.adapt(pairs);
    }
    if (message.kind === "error") {
      this.adaptQueued = null;
    }
  }

  hello(): void {
    this.send({ kind: "hello", payload: { version: PROTOCOL_VERSION } });
  }

  requestScene(name: string): void {
    this.send({ kind: "scene_data", payload: { scene: name } });
  }

  startSession(options: {
    scene: string;
    mode: ModeName;
    seed: number;
    population_size?: number;
    generations?: number;
    tau_lower?: number;
    tau_upper?: number;
  }): void {
    this.send({ kind: "start_session", payload: { ...options } });
  }

  submitMoves(moves: Record<string, Vec3>): void {
    this.send({ kind: "submit_moves", session_id: this.view.sessionId, payload: { moves } });
  }

  adapt(pairs: [number, number][]): void {
    this.update({ ...this.view, adaptInFlight: true, progress: null });
    this.send({ kind: "adapt", session_id: this.view.sessionId, payload: { pairs } });
  }

  /**
   * Commit the staged drags. Manual mode places them directly; the optimizer
   * modes chain an adapt (with the requested scatter pairs) after the server
   * confirms the moves.
   */
  commitMovesAndAdapt(pairs: [number, number][] = [[3, 4]]): void {
    const count = pendingCount(this.view);
    if (count === 0) throw new Error("no pending moves to commit");
    if (this.view.mode !== "manual" && !canAdapt(this.view)) {
      throw new Error("adapt unavailable (busy, or move count out of 1..3)");
    }
    const moves = { ...this.view.pendingMoves };
    if (this.view.mode !== "manual") {
      this.adaptQueued = pairs;
    }
    this.submitMoves(moves);
  }

  finish(): void {
    this.send({ kind: "finish", session_id: this.view.sessionId });
  }

  disconnect(): void {
    this.socket?.close();
    this.socket = null;
    this.update(setConnected(this.view, false));
  }
}
