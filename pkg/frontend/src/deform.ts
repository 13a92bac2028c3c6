/** Client-side deformation for live packs: six-plane bilinear features
 *  fused by per-level product, a two-layer tanh decoder with separate
 *  heads, per-head embedding gains, all referenced to t = 0. Mirrors the
 *  engine exactly (the parity tests compare against baked snapshots). */

import { Tensor } from "./tensor.js";
import { SplatSet, cloneSplats } from "./splats.js";
import { quatMul, quatNormalize } from "./mat.js";
import { HexplaneMeta } from "./types.js";

const PLANE_AXES: [number, number][] = [[0, 1], [0, 2], [1, 2], [0, 3], [1, 3], [2, 3]];

export interface DeformField {
  meta: HexplaneMeta;
  bboxLo: number[];
  bboxHi: number[];
  grids: Tensor[][]; // [level][plane] dims (Ra, Rb, F)
  decoder: Record<string, Tensor>;
  embedding: Float32Array;
}

function samplePlane(grid: Tensor, qa: number, qb: number, out: Float64Array): void {
  const [ra, rb, f] = grid.dims;
  const ga = qa * (ra - 1);
  const gb = qb * (rb - 1);
  let i0 = Math.min(Math.max(Math.floor(ga), 0), ra - 2);
  let j0 = Math.min(Math.max(Math.floor(gb), 0), rb - 2);
  const fa = ga - i0;
  const fb = gb - j0;
  const base00 = (i0 * rb + j0) * f;
  const base10 = ((i0 + 1) * rb + j0) * f;
  const base01 = (i0 * rb + j0 + 1) * f;
  const base11 = ((i0 + 1) * rb + j0 + 1) * f;
  const d = grid.data;
  for (let k = 0; k < f; k++) {
    out[k] =
      (1 - fa) * (1 - fb) * d[base00 + k] +
      fa * (1 - fb) * d[base10 + k] +
      (1 - fa) * fb * d[base01 + k] +
      fa * fb * d[base11 + k];
  }
}

function features(field: DeformField, coords: number[], out: Float64Array): void {
  const f = field.meta.n_features;
  const scratch = new Float64Array(f);
  const q = coords.map((v) => Math.min(Math.max(v, 0), 1));
  for (let lv = 0; lv < field.grids.length; lv++) {
    const level = field.grids[lv];
    const acc = out.subarray(lv * f, (lv + 1) * f);
    acc.fill(1);
    for (let pl = 0; pl < 6; pl++) {
      const [a, b] = PLANE_AXES[pl];
      samplePlane(level[pl], q[a], q[b], scratch);
      for (let k = 0; k < f; k++) acc[k] *= scratch[k];
    }
  }
}

function linear(w: Tensor, b: Tensor, input: Float64Array, out: Float64Array): void {
  const [rows, cols] = w.dims;
  for (let r = 0; r < rows; r++) {
    let acc = b.data[r];
    const base = r * cols;
    for (let c = 0; c < cols; c++) acc += w.data[base + c] * input[c];
    out[r] = acc;
  }
}

interface HeadOut {
  dx: Float64Array;
  dr: Float64Array;
  ds: Float64Array;
}

function decode(field: DeformField, input: Float64Array): HeadOut {
  const dec = field.decoder;
  const hidden = dec.w1.dims[0];
  const h1 = new Float64Array(hidden);
  linear(dec.w1, dec.b1, input, h1);
  for (let i = 0; i < hidden; i++) h1[i] = Math.tanh(h1[i]);
  const h2 = new Float64Array(hidden);
  linear(dec.w2, dec.b2, h1, h2);
  for (let i = 0; i < hidden; i++) h2[i] = Math.tanh(h2[i]);
  const dx = new Float64Array(3);
  const dr = new Float64Array(4);
  const ds = new Float64Array(3);
  linear(dec.w_dx, dec.b_dx, h2, dx);
  linear(dec.w_dr, dec.b_dr, h2, dr);
  linear(dec.w_ds, dec.b_ds, h2, ds);
  return { dx, dr, ds };
}

function gain(field: DeformField, head: string): number {
  const g = field.decoder[`g_${head}`];
  let acc = 1;
  for (let i = 0; i < field.embedding.length; i++) acc += field.embedding[i] * g.data[i];
  return acc;
}

/** Deformed copy of the canonical splats at a normalized time t in [0,1]. */
export function deformSplats(canonical: SplatSet, field: DeformField, t: number): SplatSet {
  const out = cloneSplats(canonical);
  const featDim = field.grids.length * field.meta.n_features;
  const embDim = field.embedding.length;
  const input = new Float64Array(featDim + embDim);
  for (let i = 0; i < embDim; i++) input[featDim + i] = field.embedding[i];
  const featT = input.subarray(0, featDim);
  const feat0 = new Float64Array(featDim);
  const gDx = gain(field, "dx");
  const gDr = gain(field, "dr");
  const gDs = gain(field, "ds");

  const span = [0, 1, 2].map((k) => field.bboxHi[k] - field.bboxLo[k]);
  for (let i = 0; i < canonical.count; i++) {
    const coords = [0, 0, 0, t];
    for (let k = 0; k < 3; k++) {
      coords[k] = (canonical.positions[i * 3 + k] - field.bboxLo[k]) / span[k];
    }
    features(field, coords, featT);
    const outT = decode(field, input);
    coords[3] = 0;
    features(field, coords, feat0);
    featT.set(feat0);
    const out0 = decode(field, input);
    // restore time-t features layout for the next splat is unnecessary:
    // featT is overwritten at the top of the loop

    for (let k = 0; k < 3; k++) {
      out.positions[i * 3 + k] += gDx * (outT.dx[k] - out0.dx[k]);
      out.scales[i * 3 + k] *= Math.exp(gDs * (outT.ds[k] - out0.ds[k]));
    }
    const delta = quatNormalize([
      1 + gDr * (outT.dr[0] - out0.dr[0]),
      gDr * (outT.dr[1] - out0.dr[1]),
      gDr * (outT.dr[2] - out0.dr[2]),
      gDr * (outT.dr[3] - out0.dr[3]),
    ]);
    const qn = quatNormalize([
      canonical.rotations[i * 4], canonical.rotations[i * 4 + 1],
      canonical.rotations[i * 4 + 2], canonical.rotations[i * 4 + 3],
    ]);
    const rotated = quatMul(delta, qn);
    for (let k = 0; k < 4; k++) out.rotations[i * 4 + k] = rotated[k];
  }
  return out;
}
