import { describe, expect, it } from "vitest";
import { PROTOCOL_VERSION } from "../src/protocol.js";
import { SocketLike, UiSession } from "../src/session.js";

/** Deterministic little world: fake clock, fake timers, scripted sockets. */
class Harness {
  t = 0;
  timers: Array<{ at: number; fn: () => void }> = [];
  sockets: FakeSocket[] = [];

  now = () => this.t;
  schedule = (fn: () => void, ms: number) => {
    this.timers.push({ at: this.t + ms, fn });
    return 0;
  };
  makeSocket = (_url: string): SocketLike => {
    const sock = new FakeSocket();
    this.sockets.push(sock);
    return sock;
  };

  advance(ms: number): void {
    const target = this.t + ms;
    for (;;) {
      const due = this.timers.filter((x) => x.at <= target).sort((a, b) => a.at - b.at)[0];
      if (!due) break;
      this.timers = this.timers.filter((x) => x !== due);
      this.t = due.at;
      due.fn();
    }
    this.t = target;
  }
}

class FakeSocket implements SocketLike {
  sent: string[] = [];
  onopen: (() => void) | null = null;
  onclose: ((ev: { code: number; reason: string }) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onerror: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.onclose?.({ code: 1000, reason: "client close" });
  }
  serverSend(obj: unknown): void {
    this.onmessage?.({ data: JSON.stringify(obj) });
  }
  open(): void {
    this.onopen?.();
    this.serverSend({
      type: "hello", version: PROTOCOL_VERSION, config: "starlink",
      link: { rate_bps: 300000, propagation_delay_ms: 500 },
    });
  }
}

function makeSession(h: Harness): UiSession {
  return new UiSession("ws://test", {
    now: h.now, setTimeoutFn: h.schedule, makeSocket: h.makeSocket,
    commandRateHz: 10, pingIntervalMs: 500,
  });
}

describe("UiSession", () => {
  it("connects and stores the hello", () => {
    const h = new Harness();
    const session = makeSession(h);
    h.sockets[0].open();
    expect(session.status).toBe("connected");
    expect(session.hello?.config).toBe("starlink");
  });

  it("measures RTT from ping to pong (1 s emulated round trip)", () => {
    const h = new Harness();
    const session = makeSession(h);
    const sock = h.sockets[0];
    sock.open();
    session.tick(); // emits the first ping immediately
    const ping = sock.sent.map((s) => JSON.parse(s)).find((m) => m.type === "ping");
    expect(ping).toBeDefined();
    h.advance(1000); // 500 ms each way through the emulated link
    sock.serverSend({ type: "pong", t: ping.t });
    expect(session.rttMs).not.toBeNull();
    expect(Math.abs(session.rttMs! - 1000)).toBeLessThanOrEqual(100); // within 10 %
  });

  it("renders only server-confirmed state", () => {
    const h = new Harness();
    const session = makeSession(h);
    const sock = h.sockets[0];
    sock.open();
    expect(session.lastState).toBeNull();
    sock.serverSend({ type: "state", t: 1.0, pose: [0.5, 0, 0], triplet: [0.2, 0, 0], q: [] });
    expect(session.lastState?.pose).toEqual([0.5, 0, 0]);
  });

  it("caps feet command emission at the command rate", () => {
    const h = new Harness();
    const session = makeSession(h);
    const sock = h.sockets[0];
    sock.open();
    for (let i = 0; i < 100; i++) {
      h.advance(10); // pointer events at 100 Hz for 1 s
      session.offerFeet({ pL: [i / 1000, 0.1], pR: [0, -0.1], yawL: 0, yawR: 0 });
      session.tick();
    }
    let feet = sock.sent.map((s) => JSON.parse(s)).filter((m) => m.type === "cmd.feet");
    expect(feet.length).toBeLessThanOrEqual(11);
    expect(feet.length).toBeGreaterThanOrEqual(9);
    // each emission carries the newest offer: flushing after the hold-off
    // window yields the final pointer position
    h.advance(100);
    session.tick();
    feet = sock.sent.map((s) => JSON.parse(s)).filter((m) => m.type === "cmd.feet");
    expect(feet[feet.length - 1].pL[0]).toBeCloseTo(0.099, 6);
  });

  it("reconnects with exponential backoff and converges to server state", () => {
    const h = new Harness();
    const session = makeSession(h);
    h.sockets[0].open();
    h.sockets[0].onclose?.({ code: 1006, reason: "network blip" });
    expect(session.status).toBe("reconnecting");
    h.advance(500); // first backoff
    expect(h.sockets.length).toBe(2);
    h.sockets[1].onclose?.({ code: 1006, reason: "still down" });
    h.advance(999);
    expect(h.sockets.length).toBe(2); // doubled backoff not yet elapsed
    h.advance(1);
    expect(h.sockets.length).toBe(3);
    h.sockets[2].open();
    expect(session.status).toBe("connected");
    h.sockets[2].serverSend({ type: "state", t: 9, pose: [1, 2, 0], triplet: [0, 0, 0], q: [] });
    expect(session.lastState?.pose).toEqual([1, 2, 0]);
  });

  it("surfaces protocol errors as a banner message without crashing", () => {
    const h = new Harness();
    const session = makeSession(h);
    const sock = h.sockets[0];
    sock.open();
    sock.onmessage?.({ data: "{broken" });
    expect(session.lastError).toContain("JSON");
    expect(session.status).toBe("connected");
  });
});
