import { ApiClient, ApiError } from "./api.js";
import { CapturedSwipe, VerifyResult } from "./types.js";

/** UI-facing progress/result events emitted by the flows. */
export interface FlowEvents {
  onProgress?(done: number, target: number): void;
  onResult?(result: VerifyResult): void;
  onError?(message: string, retryable: boolean): void;
}

/**
 * Enrollment: submit captured swipes until the gallery holds `targetG`.
 * Returns the gallery size reported by the service after each swipe, so
 * the caller keeps capturing until done. Network and 4xx/5xx problems are
 * surfaced through onError with a retry affordance.
 */
export class EnrollFlow {
  private done = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly userId: string,
    readonly targetG: number,
    private readonly events: FlowEvents = {},
  ) {}

  get complete(): boolean {
    return this.done >= this.targetG;
  }

  get progress(): { done: number; target: number } {
    return { done: this.done, target: this.targetG };
  }

  async submit(swipe: CapturedSwipe): Promise<boolean> {
    try {
      this.done = await this.api.enroll(this.userId, swipe);
    } catch (err) {
      this.events.onError?.(describe(err), true);
      return false;
    }
    this.events.onProgress?.(this.done, this.targetG);
    return true;
  }
}

/** Verification: submit one swipe, surface score/threshold/verdict. */
export class VerifyFlow {
  constructor(
    private readonly api: ApiClient,
    private readonly userId: string,
    private readonly events: FlowEvents = {},
  ) {}

  async submit(swipe: CapturedSwipe): Promise<VerifyResult | null> {
    try {
      const result = await this.api.verify(this.userId, swipe);
      this.events.onResult?.(result);
      return result;
    } catch (err) {
      if (err instanceof ApiError && err.notEnrolled) {
        this.events.onError?.(`not enrolled: ${err.reason}`, false);
      } else {
        this.events.onError?.(describe(err), true);
      }
      return null;
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.reason;
  if (err instanceof Error) return err.message;
  return String(err);
}
