import type { Camera } from "./camera.js";
import type { DemoSample } from "./types.js";

// Pointer-stream capture for demonstration sketching.  Screen points are
// mapped onto the horizontal sketch plane at the moment they arrive, so
// changing the plane height mid-stroke (keyboard) yields genuinely 3-D
// demonstrations from a 2-D pointer.

export const MIN_DEMO_SAMPLES = 5;

export interface SketchResult {
  samples: DemoSample[];
  discarded: boolean;
  reason?: string;
}

export class SketchCapture {
  private samples: DemoSample[] = [];
  private startMs: number | null = null;
  private lastT = -Infinity;

  get active(): boolean {
    return this.startMs !== null;
  }

  get sampleCount(): number {
    return this.samples.length;
  }

  begin(camera: Camera, sx: number, sy: number, planeZ: number, timeMs: number): void {
    this.samples = [];
    this.startMs = timeMs;
    this.lastT = -Infinity;
    this.extend(camera, sx, sy, planeZ, timeMs);
  }

  extend(camera: Camera, sx: number, sy: number, planeZ: number, timeMs: number): void {
    if (this.startMs === null) {
      return;
    }
    const world = camera.screenToPlane(sx, sy, planeZ);
    if (world === null) {
      return; // plane edge-on; drop the event rather than invent a point
    }
    const t = (timeMs - this.startMs) / 1000;
    if (t <= this.lastT) {
      return; // pointer events can repeat a timestamp; keep t strictly increasing
    }
    this.lastT = t;
    this.samples.push([t, world[0], world[1], world[2]]);
  }

  /** Finish the stroke.  Strokes shorter than MIN_DEMO_SAMPLES are discarded. */
  end(): SketchResult {
    const samples = this.samples;
    this.samples = [];
    this.startMs = null;
    if (samples.length < MIN_DEMO_SAMPLES) {
      return {
        samples: [],
        discarded: true,
        reason: `stroke too short (${samples.length} samples, need ${MIN_DEMO_SAMPLES})`,
      };
    }
    return { samples, discarded: false };
  }

  cancel(): void {
    this.samples = [];
    this.startMs = null;
  }
}

/** Nearest-sample snap used when marking keypoints on a demo. */
export function snapToSample(sampleTimes: number[], t: number): number {
  let best = sampleTimes[0] ?? 0;
  let bestDist = Infinity;
  for (const st of sampleTimes) {
    const d = Math.abs(st - t);
    if (d < bestDist) {
      bestDist = d;
      best = st;
    }
  }
  return best;
}
