import { CapturedSwipe, SwipePayload, VerifyResult, toPayload } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly reason: string,
  ) {
    super(`HTTP ${status}: ${reason}`);
  }

  get notEnrolled(): boolean {
    return this.status === 404;
  }
}

async function reasonOf(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.reason === "string") return body.reason;
    return JSON.stringify(body);
  } catch {
    return res.statusText || "request failed";
  }
}

/** Thin client over the service's JSON endpoints. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async post<T>(path: string, payload: SwipePayload): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!res.ok) throw new ApiError(res.status, await reasonOf(res));
    return (await res.json()) as T;
  }

  async enroll(userId: string, swipe: CapturedSwipe): Promise<number> {
    const body = await this.post<{ gallery_size: number }>(
      "/enroll",
      toPayload(userId, swipe),
    );
    return body.gallery_size;
  }

  async verify(userId: string, swipe: CapturedSwipe): Promise<VerifyResult> {
    return this.post<VerifyResult>("/verify", toPayload(userId, swipe));
  }

  async health(): Promise<{ status: string; model_version: string }> {
    const res = await this.fetchFn(`${this.baseUrl}/health`);
    if (!res.ok) throw new ApiError(res.status, await reasonOf(res));
    return (await res.json()) as { status: string; model_version: string };
  }
}
