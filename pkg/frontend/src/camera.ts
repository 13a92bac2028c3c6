/** Orbit/fly camera over the engine's convention (world-to-camera
 *  quaternion wxyz plus translation), with URL-hash state round-trip. */

import { CameraPose } from "./types.js";
import { Quat, Vec3, quatFromAxisAngle, quatMul, quatToMat3, mat3MulVec } from "./mat.js";

export interface OrbitState {
  target: Vec3;
  distance: number;
  yaw: number;   // radians about +y
  pitch: number; // radians about camera x
}

export class OrbitCamera {
  state: OrbitState;

  constructor(state?: Partial<OrbitState>) {
    this.state = {
      target: [0, 0, 3],
      distance: 3,
      yaw: 0,
      pitch: 0,
      ...state,
    };
  }

  rotate(dYaw: number, dPitch: number): void {
    this.state.yaw += dYaw;
    const cap = Math.PI / 2 - 1e-3;
    this.state.pitch = Math.min(Math.max(this.state.pitch + dPitch, -cap), cap);
  }

  dolly(factor: number): void {
    this.state.distance = Math.min(Math.max(this.state.distance * factor, 0.05), 100);
  }

  pan(dx: number, dy: number): void {
    const rot = quatToMat3(this.quaternion());
    // camera right = row 0, camera up = -row 1 (image y grows downward)
    this.state.target = [
      this.state.target[0] + rot[0] * dx - rot[3] * dy,
      this.state.target[1] + rot[1] * dx - rot[4] * dy,
      this.state.target[2] + rot[2] * dx - rot[5] * dy,
    ];
  }

  /** Fly the target along the viewing axes (keyboard navigation). */
  fly(forward: number, right: number, up: number): void {
    const rot = quatToMat3(this.quaternion());
    this.state.target = [
      this.state.target[0] + rot[6] * forward + rot[0] * right - rot[3] * up,
      this.state.target[1] + rot[7] * forward + rot[1] * right - rot[4] * up,
      this.state.target[2] + rot[8] * forward + rot[2] * right - rot[5] * up,
    ];
  }

  quaternion(): Quat {
    const qYaw = quatFromAxisAngle([0, 1, 0], this.state.yaw);
    const qPitch = quatFromAxisAngle([1, 0, 0], this.state.pitch);
    return quatMul(qPitch, qYaw);
  }

  pose(): CameraPose {
    const q = this.quaternion();
    const rot = quatToMat3(q);
    const { target, distance } = this.state;
    // camera center sits `distance` behind the target along the view axis
    const center: Vec3 = [
      target[0] - rot[6] * distance,
      target[1] - rot[7] * distance,
      target[2] - rot[8] * distance,
    ];
    const rc = mat3MulVec(rot, center);
    return {
      rotation: q,
      translation: [-rc[0], -rc[1], -rc[2]],
    };
  }

  toUrlHash(time = 0): string {
    const s = this.state;
    const vals = [...s.target, s.distance, s.yaw, s.pitch, time];
    return "#v=" + vals.map((v) => v.toFixed(6)).join(",");
  }

  static fromUrlHash(hash: string): { camera: OrbitCamera; time: number } | null {
    const match = /#v=([-\d.,eE]+)/.exec(hash);
    if (!match) return null;
    const vals = match[1].split(",").map(Number);
    if (vals.length !== 7 || vals.some((v) => !Number.isFinite(v))) return null;
    const camera = new OrbitCamera({
      target: [vals[0], vals[1], vals[2]],
      distance: vals[3],
      yaw: vals[4],
      pitch: vals[5],
    });
    return { camera, time: vals[6] };
  }
}
