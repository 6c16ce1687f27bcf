import { PointerSample } from "../src/capture.js";

/** Deterministic-ish scripted swipe: a smooth left-to-right drag with
 *  slight jitter, emitted as a pointer event stream. */
export function scriptedSwipe(opts: {
  startX: number;
  startY: number;
  endX: number;
  endY: number;
  durationMs: number;
  steps: number;
  jitter?: number;
  pressure?: number | undefined;
  pointerType?: string;
  rng?: () => number;
}): PointerSample[] {
  const rng = opts.rng ?? Math.random;
  const jitter = opts.jitter ?? 0;
  const events: PointerSample[] = [];
  for (let i = 0; i <= opts.steps; i++) {
    const tau = i / opts.steps;
    // minimum-jerk-style easing so speed is human-shaped
    const s = 10 * tau ** 3 - 15 * tau ** 4 + 6 * tau ** 5;
    const x = opts.startX + (opts.endX - opts.startX) * s + (rng() - 0.5) * jitter;
    const y = opts.startY + (opts.endY - opts.startY) * s + (rng() - 0.5) * jitter;
    const p = opts.pressure === undefined
      ? undefined
      : opts.pressure * Math.min(1, Math.min(tau / 0.15, (1 - tau) / 0.15 + 1e-9));
    events.push({
      type: i === 0 ? "down" : i === opts.steps ? "up" : "move",
      x,
      y,
      pressure: p,
      t: (opts.durationMs * i) / opts.steps,
      pointerType: opts.pointerType ?? "touch",
    });
  }
  return events;
}

/** Tiny seeded generator so scripted swipes are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
