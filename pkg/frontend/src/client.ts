/** Thin WebSocket wrapper: one socket, reconnect with the known session id,
 * all state owned by the UiSession reducer.  A socket factory is injected so
 * tests can drive the client with fakes or a node `ws` implementation. */

import {
  UiSession,
  applyServerText,
  initialSession,
  setConnection,
  submitAnswer,
} from "./session.js";
import { Bit } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onopen: ((ev: unknown) => void) | null;
  onclose: ((ev: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export class LabelerClient {
  session: UiSession = initialSession();
  private socket: SocketLike | null = null;
  private listeners: Array<(s: UiSession) => void> = [];

  constructor(
    private readonly baseUrl: string, // e.g. ws://127.0.0.1:8765
    private readonly makeSocket: SocketFactory,
  ) {}

  onChange(fn: (s: UiSession) => void): void {
    this.listeners.push(fn);
  }

  private update(next: UiSession): void {
    this.session = next;
    for (const fn of this.listeners) fn(next);
  }

  /** Connect, or reconnect resuming the server-side session when an id is
   * already known. */
  connect(): void {
    const sid = this.session.sessionId;
    const url = sid
      ? `${this.baseUrl}/session?session=${encodeURIComponent(sid)}`
      : `${this.baseUrl}/session`;
    const sock = this.makeSocket(url);
    this.socket = sock;
    this.update(setConnection(this.session, "connecting"));
    sock.onopen = () => this.update(setConnection(this.session, "open"));
    sock.onmessage = (ev) => this.update(applyServerText(this.session, String(ev.data)));
    sock.onclose = () => this.update(setConnection(this.session, "closed"));
  }

  /** Answer the outstanding query; at most one frame per issued query
   * reaches the wire regardless of how often this is called.  Without a
   * live socket the query stays outstanding so the answer is not lost. */
  answer(t: number, bit: Bit): boolean {
    if (!this.socket || this.session.connection !== "open") {
      return false;
    }
    const { session, wire } = submitAnswer(this.session, t, bit);
    this.update(session);
    if (wire !== null) {
      this.socket.send(wire);
      return true;
    }
    return false;
  }

  disconnect(): void {
    this.socket?.close();
    this.socket = null;
  }
}
