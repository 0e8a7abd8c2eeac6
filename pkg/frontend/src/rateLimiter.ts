/**
 * Caps command emission at a fixed rate regardless of pointer-event rate.
 *
 * offer() stores the newest value; the consumer flushes at most once per
 * period, always with the latest offer (the same keep-latest rule the
 * bridge applies server-side).
 */
export class RateLimiter<T> {
  private periodMs: number;
  private lastEmit = -Infinity;
  private pending: T | null = null;

  constructor(rateHz: number, private now: () => number = () => performance.now()) {
    if (rateHz <= 0) throw new Error("rateHz must be > 0");
    this.periodMs = 1000 / rateHz;
  }

  offer(value: T): void {
    this.pending = value;
  }

  /** Returns the value to emit now, or null if inside the hold-off window. */
  poll(): T | null {
    if (this.pending === null) return null;
    const t = this.now();
    if (t - this.lastEmit < this.periodMs) return null;
    this.lastEmit = t;
    const out = this.pending;
    this.pending = null;
    return out;
  }
}
