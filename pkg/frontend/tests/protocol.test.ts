import { describe, expect, it } from "vitest";
import { parseServerMsg, PROTOCOL_VERSION, ProtocolError, serialize } from "../src/protocol.js";

describe("parseServerMsg", () => {
  it("accepts a matching hello", () => {
    const msg = parseServerMsg(JSON.stringify({
      type: "hello", version: PROTOCOL_VERSION, config: "starlink",
      link: { rate_bps: 300000, propagation_delay_ms: 500 },
    }));
    expect(msg.type).toBe("hello");
  });

  it("rejects a version mismatch", () => {
    expect(() => parseServerMsg(JSON.stringify({
      type: "hello", version: 99, config: "x", link: { rate_bps: 1, propagation_delay_ms: 0 },
    }))).toThrow(ProtocolError);
  });

  it("rejects malformed JSON and unknown types", () => {
    expect(() => parseServerMsg("{nope")).toThrow(ProtocolError);
    expect(() => parseServerMsg(JSON.stringify({ type: "surprise" }))).toThrow(ProtocolError);
    expect(() => parseServerMsg("42")).toThrow(ProtocolError);
  });

  it("passes state and stats through", () => {
    const state = parseServerMsg(JSON.stringify({
      type: "state", t: 1.5, pose: [0.1, 0, 0], triplet: [0.2, 0, 0], q: [0, 0],
    }));
    expect(state.type).toBe("state");
    const stats = parseServerMsg(JSON.stringify({
      type: "stats", t: 1.5, bps: 21280, latency_ms: 507.1, queue_bytes: 0, drops: 0,
    }));
    expect(stats.type).toBe("stats");
  });
});

describe("serialize", () => {
  it("round-trips a feet command", () => {
    const raw = serialize({ type: "cmd.feet", pL: [0.2, 0.1], pR: [0, -0.1], yawL: 0, yawR: 0 });
    const parsed = JSON.parse(raw);
    expect(parsed["type"]).toBe("cmd.feet");
    expect(parsed["pL"]).toEqual([0.2, 0.1]);
  });
});
