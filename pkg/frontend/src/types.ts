/** One captured sample: canvas pixels, pressure in [0,1] (0 when the
 *  device reports none), milliseconds since the gesture began. */
export interface SamplePoint {
  x: number;
  y: number;
  p: number;
  t: number;
}

/** A finished gesture plus the canvas dimensions it was drawn on. */
export interface CapturedSwipe {
  samples: SamplePoint[];
  canvasWidth: number;
  canvasHeight: number;
}

/** Wire payload for POST /enroll and /verify: raw samples, no smoothing. */
export interface SwipePayload {
  user_id: string;
  samples: [number, number, number, number][];
  screen_width: number;
  screen_height: number;
  device_id: string;
}

export interface VerifyResult {
  score: number;
  accept: boolean;
  threshold: number;
}

export const MIN_SAMPLES = 5;

export function toPayload(userId: string, swipe: CapturedSwipe): SwipePayload {
  return {
    user_id: userId,
    samples: swipe.samples.map((s) => [s.x, s.y, s.p, s.t]),
    screen_width: swipe.canvasWidth,
    screen_height: swipe.canvasHeight,
    device_id: "web-canvas",
  };
}
