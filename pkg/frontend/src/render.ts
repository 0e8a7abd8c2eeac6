/** Canvas drawing: idle-area widget and top-down robot view. */

import { FootState, insideDisc, LocomotionGains } from "./idleArea.js";
import { StateMsg } from "./protocol.js";

const WIDGET_SCALE = 600;  // px per metre in the foot widget
const VIEW_SCALE = 120;    // px per metre in the top-down view

export function drawIdleWidget(ctx: CanvasRenderingContext2D, feet: FootState,
                               gains: LocomotionGains, dragging: string | null): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const cx = width / 2;
  const cy = height / 2;
  const toPx = (p: [number, number]): [number, number] =>
    [cx + p[1] * -WIDGET_SCALE, cy - p[0] * WIDGET_SCALE];

  const inside = insideDisc(feet, gains);
  const nominals: Array<[string, [number, number], [number, number], boolean]> = [
    ["L", [0, gains.stanceWidth / 2], feet.pL, inside.left],
    ["R", [0, -gains.stanceWidth / 2], feet.pR, inside.right],
  ];
  for (const [label, nominal, foot, isInside] of nominals) {
    const [nx, ny] = toPx(nominal);
    ctx.beginPath();
    ctx.arc(nx, ny, gains.idleRadius * WIDGET_SCALE, 0, 2 * Math.PI);
    ctx.strokeStyle = "#888";
    ctx.setLineDash([4, 4]);
    ctx.stroke();
    ctx.setLineDash([]);

    const [fx, fy] = toPx(foot);
    ctx.beginPath();
    ctx.arc(fx, fy, 10, 0, 2 * Math.PI);
    ctx.fillStyle = isInside ? "#4caf50" : "#e53935";
    if (dragging === label) ctx.fillStyle = "#ff9800";
    ctx.fill();
    ctx.fillStyle = "#fff";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(label, fx, fy);
  }
}

export function drawTopDown(ctx: CanvasRenderingContext2D, state: StateMsg | null,
                            trail: Array<[number, number]>): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#333";
  ctx.strokeRect(0, 0, width, height);
  const cx = width / 2;
  const cy = height / 2;
  const toPx = (x: number, y: number): [number, number] =>
    [cx - y * VIEW_SCALE, cy - x * VIEW_SCALE];

  ctx.beginPath();
  for (let i = 0; i < trail.length; i++) {
    const [px, py] = toPx(trail[i][0], trail[i][1]);
    if (i === 0) ctx.moveTo(px, py); else ctx.lineTo(px, py);
  }
  ctx.strokeStyle = "#90caf9";
  ctx.stroke();

  if (state === null) return;
  const [x, y, theta] = state.pose;
  const [px, py] = toPx(x, y);
  ctx.save();
  ctx.translate(px, py);
  ctx.rotate(-theta);
  ctx.beginPath();
  ctx.moveTo(0, -14);
  ctx.lineTo(8, 8);
  ctx.lineTo(-8, 8);
  ctx.closePath();
  ctx.fillStyle = "#1976d2";
  ctx.fill();
  ctx.restore();
}

export function formatStats(rttMs: number | null,
                            stats: { bps: number; latency_ms: number | null;
                                     queue_bytes: number; drops: number } | null): string {
  const fmt = (v: number | null, unit: string, digits = 1) =>
    v === null ? "--" : `${v.toFixed(digits)} ${unit}`;
  const lines = [
    `RTT        ${fmt(rttMs === null ? null : rttMs / 1000, "s", 3)}`,
    `uplink     ${stats ? fmt(stats.bps / 1000, "kbit/s") : "--"}`,
    `one-way    ${stats ? fmt(stats.latency_ms, "ms") : "--"}`,
    `queue      ${stats ? `${stats.queue_bytes} B` : "--"}`,
    `drops      ${stats ? `${stats.drops}` : "--"}`,
  ];
  return lines.join("\n");
}
