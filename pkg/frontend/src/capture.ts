import { CapturedSwipe, MIN_SAMPLES, SamplePoint } from "./types.js";

/** Minimal pointer-like event the recorder consumes; the DOM layer maps
 *  real PointerEvents onto this, tests feed scripted streams. */
export interface PointerSample {
  type: "down" | "move" | "up";
  x: number;
  y: number;
  /** Raw device pressure; undefined or a synthetic mouse 0.5 maps to 0. */
  pressure?: number;
  /** Event timestamp in ms (any origin; only differences matter). */
  t: number;
  pointerType?: string;
}

export type CaptureOutcome =
  | { kind: "captured"; swipe: CapturedSwipe }
  | { kind: "too-short"; samples: number };

/**
 * State machine that turns a pointer event stream into one CapturedSwipe.
 *
 * pointer-down starts a gesture, every move adds one sample, pointer-up
 * finishes it. Timestamps are made strictly increasing by coalescing: a
 * move carrying the same timestamp as the previous sample replaces it.
 * Gestures below the minimum sample count produce a "too-short" outcome
 * so the UI can prompt a retry without touching the network.
 */
export class SwipeRecorder {
  private samples: SamplePoint[] = [];
  private active = false;
  private t0 = 0;

  constructor(
    private readonly canvasWidth: number,
    private readonly canvasHeight: number,
  ) {}

  get isActive(): boolean {
    return this.active;
  }

  /** Samples recorded so far (for live trace rendering). */
  get trace(): readonly SamplePoint[] {
    return this.samples;
  }

  reset(): void {
    this.samples = [];
    this.active = false;
  }

  private pressureOf(ev: PointerSample): number {
    if (ev.pressure === undefined) return 0;
    // Mice report a synthetic 0.5 while a button is held; the wire format
    // wants 0 when there is no real pressure sensor.
    if (ev.pointerType === "mouse" && ev.pressure === 0.5) return 0;
    return Math.min(1, Math.max(0, ev.pressure));
  }

  private push(ev: PointerSample): void {
    const point: SamplePoint = {
      x: ev.x,
      y: ev.y,
      p: this.pressureOf(ev),
      t: ev.t - this.t0,
    };
    const last = this.samples[this.samples.length - 1];
    if (last !== undefined && point.t <= last.t) {
      this.samples[this.samples.length - 1] = { ...point, t: last.t };
      return;
    }
    this.samples.push(point);
  }

  /** Feed one event; returns an outcome when the gesture ends. */
  feed(ev: PointerSample): CaptureOutcome | null {
    switch (ev.type) {
      case "down":
        this.samples = [];
        this.active = true;
        this.t0 = ev.t;
        this.push(ev);
        return null;
      case "move":
        if (this.active) this.push(ev);
        return null;
      case "up": {
        if (!this.active) return null;
        this.push(ev);
        this.active = false;
        if (this.samples.length < MIN_SAMPLES) {
          const n = this.samples.length;
          this.samples = [];
          return { kind: "too-short", samples: n };
        }
        const swipe: CapturedSwipe = {
          samples: this.samples,
          canvasWidth: this.canvasWidth,
          canvasHeight: this.canvasHeight,
        };
        this.samples = [];
        return { kind: "captured", swipe };
      }
    }
  }
}
