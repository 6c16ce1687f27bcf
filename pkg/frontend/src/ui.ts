import { ApiClient } from "./api.js";
import { PointerSample, SwipeRecorder } from "./capture.js";
import { EnrollFlow, VerifyFlow } from "./flows.js";
import { CapturedSwipe } from "./types.js";

/** Wires a canvas, status line, and mode controls into the capture loop. */
export class CapturePanel {
  private recorder: SwipeRecorder;
  private enrollFlow: EnrollFlow | null = null;
  private verifyFlow: VerifyFlow | null = null;
  private lastSwipe: CapturedSwipe | null = null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly status: HTMLElement,
    private readonly api: ApiClient,
  ) {
    this.recorder = new SwipeRecorder(canvas.width, canvas.height);
    canvas.addEventListener("pointerdown", (e) => this.onPointer("down", e));
    canvas.addEventListener("pointermove", (e) => this.onPointer("move", e));
    canvas.addEventListener("pointerup", (e) => this.onPointer("up", e));
    canvas.addEventListener("pointercancel", () => this.cancelGesture());
  }

  startEnroll(userId: string, targetG: number): void {
    this.verifyFlow = null;
    this.enrollFlow = new EnrollFlow(this.api, userId, targetG, {
      onProgress: (done, target) => {
        this.say(done >= target
          ? `enrolled ${done}/${target} - done`
          : `enrolled ${done}/${target} - swipe again`);
      },
      onError: (msg) => this.say(`enroll failed: ${msg} - swipe to retry`),
    });
    this.say(`enrolling ${userId}: swipe 0/${targetG}`);
  }

  startVerify(userId: string): void {
    this.enrollFlow = null;
    this.verifyFlow = new VerifyFlow(this.api, userId, {
      onResult: (r) => {
        const verdict = r.accept ? "ACCEPT" : "REJECT";
        this.say(`${verdict} - score ${r.score.toFixed(4)} `
          + `(threshold ${r.threshold.toFixed(4)})`);
      },
      onError: (msg, retryable) =>
        this.say(retryable ? `verify failed: ${msg} - swipe to retry` : msg),
    });
    this.say(`verifying ${userId}: swipe once`);
  }

  /** Redo: forget the in-progress or last gesture without sending it. */
  redo(): void {
    this.recorder.reset();
    this.lastSwipe = null;
    this.clearCanvas();
    this.say("gesture discarded - swipe again");
  }

  private onPointer(type: PointerSample["type"], e: PointerEvent): void {
    if (type === "down") this.canvas.setPointerCapture(e.pointerId);
    const outcome = this.recorder.feed({
      type,
      x: e.offsetX,
      y: e.offsetY,
      pressure: e.pressure,
      t: e.timeStamp,
      pointerType: e.pointerType,
    });
    this.drawTrace();
    if (outcome === null) return;
    if (outcome.kind === "too-short") {
      this.say(`gesture too short (${outcome.samples} samples) - try again`);
      return;
    }
    this.lastSwipe = outcome.swipe;
    void this.dispatch(outcome.swipe);
  }

  private async dispatch(swipe: CapturedSwipe): Promise<void> {
    if (this.enrollFlow !== null) {
      await this.enrollFlow.submit(swipe);
    } else if (this.verifyFlow !== null) {
      await this.verifyFlow.submit(swipe);
    } else {
      this.say("captured - pick enroll or verify first");
    }
  }

  private cancelGesture(): void {
    this.recorder.reset();
    this.say("gesture cancelled");
  }

  private drawTrace(): void {
    const ctx = this.canvas.getContext("2d");
    if (ctx === null) return;
    this.clearCanvas();
    const pts = this.recorder.trace.length > 0
      ? this.recorder.trace
      : this.lastSwipe?.samples ?? [];
    if (pts.length === 0) return;
    ctx.beginPath();
    ctx.moveTo(pts[0].x, pts[0].y);
    for (const p of pts) ctx.lineTo(p.x, p.y);
    ctx.lineWidth = 2;
    ctx.strokeStyle = "#2060c0";
    ctx.stroke();
  }

  private clearCanvas(): void {
    const ctx = this.canvas.getContext("2d");
    ctx?.clearRect(0, 0, this.canvas.width, this.canvas.height);
  }

  private say(msg: string): void {
    this.status.textContent = msg;
  }
}
