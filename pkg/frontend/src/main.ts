import { DEFAULT_GAINS, FootState, nominalStance, predictTriplet } from "./idleArea.js";
import { drawIdleWidget, drawTopDown, formatStats } from "./render.js";
import { UiSession } from "./session.js";

const WIDGET_SCALE = 600;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function main(): void {
  const params = new URLSearchParams(location.search);
  const url = params.get("server")
    ?? `ws://${location.hostname || "127.0.0.1"}:${params.get("port") ?? "8765"}`;

  const gains = { ...DEFAULT_GAINS };
  const feet: FootState = nominalStance(gains);
  let dragging: "L" | "R" | null = null;

  const widget = el<HTMLCanvasElement>("widget");
  const view = el<HTMLCanvasElement>("view");
  const statsPane = el<HTMLPreElement>("stats");
  const banner = el<HTMLDivElement>("banner");
  const yawDial = el<HTMLInputElement>("yaw");
  const gloveSlider = el<HTMLInputElement>("glove");
  const floodToggle = el<HTMLInputElement>("flood");
  const widgetCtx = widget.getContext("2d")!;
  const viewCtx = view.getContext("2d")!;
  const trail: Array<[number, number]> = [];

  const session = new UiSession(url);

  function canvasToStance(ev: MouseEvent): [number, number] {
    const rect = widget.getBoundingClientRect();
    const px = ev.clientX - rect.left;
    const py = ev.clientY - rect.top;
    // invert the widget projection (x up, y left)
    return [(widget.height / 2 - py) / WIDGET_SCALE,
            -(px - widget.width / 2) / WIDGET_SCALE];
  }

  widget.addEventListener("mousedown", (ev) => {
    const [x, y] = canvasToStance(ev);
    const dl = Math.hypot(x - feet.pL[0], y - feet.pL[1]);
    const dr = Math.hypot(x - feet.pR[0], y - feet.pR[1]);
    dragging = dl <= dr ? "L" : "R";
  });
  widget.addEventListener("mousemove", (ev) => {
    if (!dragging) return;
    const p = canvasToStance(ev);
    if (dragging === "L") feet.pL = p; else feet.pR = p;
    session.offerFeet(feet);
  });
  const release = () => {
    if (!dragging) return;
    // marker snaps back to nominal stance, like lifting the foot back
    const nominal = nominalStance(gains);
    if (dragging === "L") feet.pL = nominal.pL; else feet.pR = nominal.pR;
    dragging = null;
    session.offerFeet(feet);
  };
  widget.addEventListener("mouseup", release);
  widget.addEventListener("mouseleave", release);

  yawDial.addEventListener("input", () => {
    const yaw = parseFloat(yawDial.value);
    feet.yawL = yaw;
    feet.yawR = yaw;
    session.offerFeet(feet);
  });

  gloveSlider.addEventListener("input", () => {
    const close = parseFloat(gloveSlider.value);
    session.sendGlove(Array.from({ length: 20 }, () => close));
  });

  floodToggle.addEventListener("change", () => {
    session.setFlood(floodToggle.checked);
  });

  function frame(): void {
    session.tick();
    drawIdleWidget(widgetCtx, feet, gains, dragging);
    if (session.lastState) {
      const [x, y] = session.lastState.pose;
      const last = trail[trail.length - 1];
      if (!last || Math.hypot(x - last[0], y - last[1]) > 1e-3) {
        trail.push([x, y]);
        if (trail.length > 2000) trail.shift();
      }
    }
    drawTopDown(viewCtx, session.lastState, trail);
    statsPane.textContent = formatStats(session.rttMs, session.lastStats);
    const predicted = predictTriplet(feet, gains);
    const reported = session.lastState?.triplet ?? [0, 0, 0];
    el<HTMLPreElement>("triplet").textContent =
      `local   v=${predicted.v.toFixed(3)} w=${predicted.omega.toFixed(3)} vl=${predicted.vLat.toFixed(3)}\n` +
      `server  v=${reported[0].toFixed(3)} w=${reported[1].toFixed(3)} vl=${reported[2].toFixed(3)}`;
    banner.textContent = session.status === "connected"
      ? `connected to ${session.hello?.config ?? "?"}`
      : `${session.status}${session.lastError ? `: ${session.lastError}` : ""}`;
    banner.className = session.status === "connected" ? "ok" : "warn";
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

main();
