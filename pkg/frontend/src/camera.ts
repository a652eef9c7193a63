import type { Vec3 } from "./types.js";

// Orthographic orbit camera.  World units are meters; the desk-scale scene
// fits in roughly a 1.5 m cube, so the default zoom maps that to a ~700 px
// viewport.  "plan" locks the view top-down for sketching; orbit parameters
// are kept so toggling back restores the 3-D view.

export type ViewMode = "orbit" | "plan";

export interface Screen {
  x: number;
  y: number;
  depth: number;
}

const DEG = Math.PI / 180;

export class Camera {
  mode: ViewMode = "plan";
  yawRad = -35 * DEG;
  pitchRad = -55 * DEG;
  zoom = 420; // px per meter
  target: Vec3 = [0.5, 0.0, 0.1];
  viewportW = 900;
  viewportH = 640;

  private rotation(): number[] {
    // Rows of R = Rx(pitch) * Rz(yaw).  Plan mode is the identity view:
    // world x/y to screen axes, world z as depth — i.e. straight top-down.
    const yaw = this.mode === "plan" ? 0 : this.yawRad;
    const pitch = this.mode === "plan" ? 0 : this.pitchRad;
    const cy = Math.cos(yaw);
    const sy = Math.sin(yaw);
    const cp = Math.cos(pitch);
    const sp = Math.sin(pitch);
    return [cy, -sy, 0, cp * sy, cp * cy, -sp, sp * sy, sp * cy, cp];
  }

  worldToScreen(p: Vec3): Screen {
    const r = this.rotation();
    const dx = p[0] - this.target[0];
    const dy = p[1] - this.target[1];
    const dz = p[2] - this.target[2];
    const vx = r[0]! * dx + r[1]! * dy + r[2]! * dz;
    const vy = r[3]! * dx + r[4]! * dy + r[5]! * dz;
    const vz = r[6]! * dx + r[7]! * dy + r[8]! * dz;
    return {
      x: this.viewportW / 2 + this.zoom * vx,
      y: this.viewportH / 2 - this.zoom * vy,
      depth: vz,
    };
  }

  /**
   * Invert the projection onto the horizontal plane z = planeZ.  Returns null
   * when the plane is seen edge-on (no unique intersection) — callers treat
   * that as "can't sketch from this angle".
   */
  screenToPlane(sx: number, sy: number, planeZ: number): Vec3 | null {
    const r = this.rotation();
    const vx = (sx - this.viewportW / 2) / this.zoom;
    const vy = -(sy - this.viewportH / 2) / this.zoom;
    // world = target + R^T (vx, vy, vz); choose vz so world z lands on the plane
    const r2z = r[8]!;
    if (Math.abs(r2z) < 1e-9) {
      return null;
    }
    const vz = (planeZ - this.target[2] - r[2]! * vx - r[5]! * vy) / r2z;
    return [
      this.target[0] + r[0]! * vx + r[3]! * vy + r[6]! * vz,
      this.target[1] + r[1]! * vx + r[4]! * vy + r[7]! * vz,
      planeZ,
    ];
  }

  orbitBy(dYawRad: number, dPitchRad: number): void {
    this.yawRad += dYawRad;
    // keep a sliver away from straight up/down so orbit never gimbal-locks
    this.pitchRad = Math.min(-5 * DEG, Math.max(-85 * DEG, this.pitchRad + dPitchRad));
  }
}
