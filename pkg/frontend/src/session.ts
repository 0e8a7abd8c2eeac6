/**
 * Operator session: socket lifecycle, command emission, and telemetry state.
 *
 * The session renders only server-confirmed robot state (never local
 * dead-reckoning), so whatever latency the emulated link imposes is exactly
 * what the operator sees. Reconnects use exponential backoff; the session is
 * stateless with respect to the simulation and converges to server state on
 * reconnect.
 */

import { FeetCmd, HelloMsg, parseServerMsg, PROTOCOL_VERSION, ProtocolError,
         serialize, StateMsg, StatsMsg } from "./protocol.js";
import { RateLimiter } from "./rateLimiter.js";
import { FootState } from "./idleArea.js";

export type SessionStatus = "connecting" | "connected" | "reconnecting" | "closed";

/** Minimal WebSocket surface so tests can substitute a fake. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: ((ev: { code: number; reason: string }) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: (() => void) | null;
}

export interface SessionOptions {
  commandRateHz?: number;
  pingIntervalMs?: number;
  maxBackoffMs?: number;
  now?: () => number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  makeSocket?: (url: string) => SocketLike;
}

export class UiSession {
  status: SessionStatus = "connecting";
  hello: HelloMsg | null = null;
  lastState: StateMsg | null = null;
  lastStats: StatsMsg | null = null;
  rttMs: number | null = null;
  lastError: string | null = null;
  onUpdate: (() => void) | null = null;

  private socket: SocketLike | null = null;
  private feetLimiter: RateLimiter<FeetCmd>;
  private pendingPings = new Map<number, number>();
  private pingSeq = 0;
  private backoffMs = 500;
  private readonly maxBackoffMs: number;
  private readonly pingIntervalMs: number;
  private lastPingAt = -Infinity;
  private closed = false;
  private now: () => number;
  private schedule: (fn: () => void, ms: number) => unknown;
  private makeSocket: (url: string) => SocketLike;

  constructor(private url: string, opts: SessionOptions = {}) {
    this.now = opts.now ?? (() => performance.now());
    this.schedule = opts.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
    this.makeSocket = opts.makeSocket ??
      ((u) => new WebSocket(u) as unknown as SocketLike);
    this.feetLimiter = new RateLimiter<FeetCmd>(opts.commandRateHz ?? 10, this.now);
    this.pingIntervalMs = opts.pingIntervalMs ?? 500;
    this.maxBackoffMs = opts.maxBackoffMs ?? 10_000;
    this.connect();
  }

  private connect(): void {
    if (this.closed) return;
    this.status = this.status === "connecting" ? "connecting" : "reconnecting";
    const sock = this.makeSocket(this.url);
    this.socket = sock;
    sock.onopen = () => {
      this.status = "connected";
      this.backoffMs = 500;
      this.lastError = null;
      sock.send(serialize({ type: "hello", version: PROTOCOL_VERSION }));
      this.notify();
    };
    sock.onmessage = (ev) => this.handleMessage(ev.data);
    sock.onerror = () => {
      this.lastError = "socket error";
      this.notify();
    };
    sock.onclose = (ev) => {
      this.socket = null;
      this.pendingPings.clear();
      if (this.closed) return;
      this.status = "reconnecting";
      this.lastError = ev.reason ? `closed: ${ev.reason} (${ev.code})` : `closed (${ev.code})`;
      this.notify();
      this.schedule(() => this.connect(), this.backoffMs);
      this.backoffMs = Math.min(this.backoffMs * 2, this.maxBackoffMs);
    };
  }

  private handleMessage(raw: string): void {
    let msg;
    try {
      msg = parseServerMsg(raw);
    } catch (e) {
      if (e instanceof ProtocolError) {
        this.lastError = e.message;
        this.notify();
        return;
      }
      throw e;
    }
    switch (msg.type) {
      case "hello":
        this.hello = msg;
        break;
      case "state":
        this.lastState = msg;
        break;
      case "stats":
        this.lastStats = msg;
        break;
      case "pong": {
        const sent = this.pendingPings.get(msg.t);
        if (sent !== undefined) {
          this.rttMs = this.now() - sent;
          this.pendingPings.delete(msg.t);
        }
        break;
      }
    }
    this.notify();
  }

  private notify(): void {
    this.onUpdate?.();
  }

  /** Queue the newest foot state; actual emission respects the command rate. */
  offerFeet(feet: FootState): void {
    this.feetLimiter.offer({
      type: "cmd.feet", pL: feet.pL, pR: feet.pR, yawL: feet.yawL, yawR: feet.yawR,
    });
  }

  sendGlove(angles: number[]): void {
    this.send(serialize({ type: "cmd.glove", angles }));
  }

  setFlood(enabled: boolean): void {
    this.send(serialize({ type: "cmd.flood", enabled }));
  }

  /** Drive from the UI animation loop: flushes feet commands and pings. */
  tick(): void {
    const feet = this.feetLimiter.poll();
    if (feet !== null) this.send(serialize(feet));
    const t = this.now();
    if (t - this.lastPingAt >= this.pingIntervalMs) {
      this.lastPingAt = t;
      const stamp = this.pingSeq++;
      this.pendingPings.set(stamp, t);
      this.send(serialize({ type: "ping", t: stamp }));
    }
  }

  private send(data: string): void {
    if (this.status === "connected" && this.socket) {
      this.socket.send(data);
    }
  }

  close(): void {
    this.closed = true;
    this.status = "closed";
    this.socket?.close();
  }
}
