/**
 * Idle-area widget geometry: two draggable foot markers around their nominal
 * stance points plus a rotation dial. Mirrors the server's locomotion law so
 * the widget can preview the commanded triplet; the authoritative value is
 * always the server-reported one.
 */

export interface LocomotionGains {
  idleRadius: number;
  stanceWidth: number;
  kLin: number;
  kLat: number;
  kAng: number;
  yawDeadband: number;
  vMax: number;
  vLatMax: number;
  omegaMax: number;
}

export const DEFAULT_GAINS: LocomotionGains = {
  idleRadius: 0.08,
  stanceWidth: 0.2,
  kLin: 2.0,
  kLat: 2.0,
  kAng: 1.0,
  yawDeadband: 0.1,
  vMax: 0.5,
  vLatMax: 0.5,
  omegaMax: 0.8,
};

export interface FootState {
  pL: [number, number];
  pR: [number, number];
  yawL: number;
  yawR: number;
}

export function nominalStance(gains: LocomotionGains): FootState {
  return {
    pL: [0, gains.stanceWidth / 2],
    pR: [0, -gains.stanceWidth / 2],
    yawL: 0,
    yawR: 0,
  };
}

function sat(v: number, bound: number): number {
  return Math.max(-bound, Math.min(bound, v));
}

function excess(p: [number, number], nominal: [number, number], r: number): [number, number] {
  const dx = p[0] - nominal[0];
  const dy = p[1] - nominal[1];
  const d = Math.hypot(dx, dy);
  if (d <= r) return [0, 0];
  const k = (d - r) / d;
  return [dx * k, dy * k];
}

/** Local preview of the server-side triplet law (translation xor rotation). */
export function predictTriplet(feet: FootState, gains: LocomotionGains):
    { v: number; omega: number; vLat: number } {
  const nl: [number, number] = [0, gains.stanceWidth / 2];
  const nr: [number, number] = [0, -gains.stanceWidth / 2];
  const eL = excess(feet.pL, nl, gains.idleRadius);
  const eR = excess(feet.pR, nr, gains.idleRadius);
  const mL = Math.hypot(eL[0], eL[1]);
  const mR = Math.hypot(eR[0], eR[1]);
  if (mL === 0 && mR === 0) {
    const meanYaw = (feet.yawL + feet.yawR) / 2;
    if (Math.abs(meanYaw) > gains.yawDeadband) {
      return { v: 0, omega: sat(gains.kAng * meanYaw, gains.omegaMax), vLat: 0 };
    }
    return { v: 0, omega: 0, vLat: 0 };
  }
  const e = mL >= mR ? eL : eR;
  return {
    v: sat(gains.kLin * e[0], gains.vMax),
    omega: 0,
    vLat: sat(gains.kLat * e[1], gains.vLatMax),
  };
}

export function insideDisc(feet: FootState, gains: LocomotionGains): { left: boolean; right: boolean } {
  const nl: [number, number] = [0, gains.stanceWidth / 2];
  const nr: [number, number] = [0, -gains.stanceWidth / 2];
  const dl = Math.hypot(feet.pL[0] - nl[0], feet.pL[1] - nl[1]);
  const dr = Math.hypot(feet.pR[0] - nr[0], feet.pR[1] - nr[1]);
  return { left: dl <= gains.idleRadius, right: dr <= gains.idleRadius };
}
