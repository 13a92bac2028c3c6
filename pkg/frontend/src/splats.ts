/** Splat records: 59 floats per row
 *  (position 3, unit quaternion 4, linear scale 3, opacity 1, SH 48). */

import { Tensor } from "./tensor.js";

export const RECORD_FLOATS = 59;

export interface SplatSet {
  count: number;
  positions: Float32Array; // (N,3)
  rotations: Float32Array; // (N,4) wxyz
  scales: Float32Array;    // (N,3) linear
  opacities: Float32Array; // (N)
  sh: Float32Array;        // (N,48)
}

export function splatsFromRecords(t: Tensor): SplatSet {
  if (t.dims.length !== 2 || t.dims[1] !== RECORD_FLOATS) {
    throw new Error(`expected (N,${RECORD_FLOATS}) splat records, got ${t.dims}`);
  }
  const n = t.dims[0];
  const set: SplatSet = {
    count: n,
    positions: new Float32Array(n * 3),
    rotations: new Float32Array(n * 4),
    scales: new Float32Array(n * 3),
    opacities: new Float32Array(n),
    sh: new Float32Array(n * 48),
  };
  for (let i = 0; i < n; i++) {
    const row = i * RECORD_FLOATS;
    for (let k = 0; k < 3; k++) set.positions[i * 3 + k] = t.data[row + k];
    for (let k = 0; k < 4; k++) set.rotations[i * 4 + k] = t.data[row + 3 + k];
    for (let k = 0; k < 3; k++) set.scales[i * 3 + k] = t.data[row + 7 + k];
    set.opacities[i] = t.data[row + 10];
    for (let k = 0; k < 48; k++) set.sh[i * 48 + k] = t.data[row + 11 + k];
  }
  return set;
}

export function cloneSplats(s: SplatSet): SplatSet {
  return {
    count: s.count,
    positions: s.positions.slice(),
    rotations: s.rotations.slice(),
    scales: s.scales.slice(),
    opacities: s.opacities.slice(),
    sh: s.sh,
  };
}

/** Indices sorted by ascending camera-space depth (front first). */
export function depthSort(positions: Float32Array, count: number, rot: number[],
                          t: ArrayLike<number>): Uint32Array {
  const z = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    const x = positions[i * 3], y = positions[i * 3 + 1], w = positions[i * 3 + 2];
    z[i] = rot[6] * x + rot[7] * y + rot[8] * w + t[2];
  }
  const order = new Uint32Array(count);
  for (let i = 0; i < count; i++) order[i] = i;
  // stable insertion on typed arrays is slow; Array.sort on indices is fine
  const idx = Array.from(order);
  idx.sort((a, b) => z[a] - z[b] || a - b);
  return Uint32Array.from(idx);
}
