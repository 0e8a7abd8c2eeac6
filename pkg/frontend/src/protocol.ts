/**
 * JSON message schema (version 1) spoken with the scenario server.
 *
 * Inbound:  hello, state, stats, pong
 * Outbound: hello, cmd.feet, cmd.glove, cmd.flood, ping
 */

export const PROTOCOL_VERSION = 1;

export interface HelloMsg {
  type: "hello";
  version: number;
  config: string;
  link: { rate_bps: number; propagation_delay_ms: number };
}

export interface StateMsg {
  type: "state";
  t: number;
  pose: [number, number, number];
  triplet: [number, number, number];
  q: number[];
}

export interface StatsMsg {
  type: "stats";
  t: number;
  bps: number;
  latency_ms: number | null;
  queue_bytes: number;
  drops: number;
}

export interface PongMsg {
  type: "pong";
  t: number;
}

export type ServerMsg = HelloMsg | StateMsg | StatsMsg | PongMsg;

export interface FeetCmd {
  type: "cmd.feet";
  pL: [number, number];
  pR: [number, number];
  yawL: number;
  yawR: number;
}

export interface GloveCmd {
  type: "cmd.glove";
  angles: number[];
}

export interface FloodCmd {
  type: "cmd.flood";
  enabled: boolean;
  rate_hz?: number;
  payload_bytes?: number;
}

export interface PingCmd {
  type: "ping";
  t: number;
}

export type ClientMsg = FeetCmd | GloveCmd | FloodCmd | PingCmd |
  { type: "hello"; version: number };

const SERVER_TYPES = new Set(["hello", "state", "stats", "pong"]);

export class ProtocolError extends Error {}

export function parseServerMsg(raw: string): ServerMsg {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch (e) {
    throw new ProtocolError(`not valid JSON: ${e}`);
  }
  if (typeof data !== "object" || data === null || !("type" in data)) {
    throw new ProtocolError("message must be an object with a type");
  }
  const msg = data as { type: string };
  if (!SERVER_TYPES.has(msg.type)) {
    throw new ProtocolError(`unknown server message type ${msg.type}`);
  }
  if (msg.type === "hello") {
    const hello = data as HelloMsg;
    if (hello.version !== PROTOCOL_VERSION) {
      throw new ProtocolError(
        `protocol version mismatch: server ${hello.version}, client ${PROTOCOL_VERSION}`);
    }
  }
  return data as ServerMsg;
}

export function serialize(msg: ClientMsg): string {
  return JSON.stringify(msg);
}
