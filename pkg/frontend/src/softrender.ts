/** CPU splat compositing with the engine's exact semantics: perspective
 *  Jacobian covariance projection with a +0.3 px^2 low-pass, depth-sorted
 *  front-to-back alpha blending truncated at 3 sigma, opacity cap 0.999.
 *  This is the parity surface the fixture tests compare against the
 *  engine; the WebGL pipeline implements the same math on the GPU. */

import { CameraIntrin, CameraPose } from "./types.js";
import { SplatSet, depthSort } from "./splats.js";
import { quatToMat3, quatNormalize, cameraCenter } from "./mat.js";
import { shBasis, shColor } from "./sh.js";

const LOWPASS = 0.3;
const Z_NEAR = 0.01;
const CUTOFF_Q = 9.0;
const ALPHA_CAP = 0.999;
const T_STOP = 1e-12;

export interface SoftImage {
  width: number;
  height: number;
  rgb: Float64Array; // (H*W*3)
}

interface Projected {
  index: number;
  z: number;
  u: number;
  v: number;
  ia: number; // packed inverse 2D covariance [[ia, ib], [ib, ic]]
  ib: number;
  ic: number;
  opacity: number;
  r: number;
  g: number;
  b: number;
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export function projectSplats(s: SplatSet, intr: CameraIntrin, pose: CameraPose): Projected[] {
  const rot = quatToMat3(quatNormalize(pose.rotation));
  const tv = pose.translation;
  const center = cameraCenter(rot, tv);
  const basis = new Float64Array(16);
  const out: Projected[] = [];
  const order = depthSort(s.positions, s.count, rot, tv);
  for (let oi = 0; oi < s.count; oi++) {
    const i = order[oi];
    const px = s.positions[i * 3], py = s.positions[i * 3 + 1], pz = s.positions[i * 3 + 2];
    const xc = rot[0] * px + rot[1] * py + rot[2] * pz + tv[0];
    const yc = rot[3] * px + rot[4] * py + rot[5] * pz + tv[1];
    const zc = rot[6] * px + rot[7] * py + rot[8] * pz + tv[2];
    if (zc <= Z_NEAR) continue;

    const q = quatNormalize([
      s.rotations[i * 4], s.rotations[i * 4 + 1], s.rotations[i * 4 + 2], s.rotations[i * 4 + 3],
    ]);
    const r3 = quatToMat3(q);
    const sx = s.scales[i * 3], sy = s.scales[i * 3 + 1], sz = s.scales[i * 3 + 2];
    // M = R_wc * R_splat * diag(scale); Sigma_cam = M M^T
    const m = new Float64Array(9);
    for (let r = 0; r < 3; r++) {
      for (let c = 0; c < 3; c++) {
        let acc = 0;
        for (let k = 0; k < 3; k++) acc += rot[r * 3 + k] * r3[k * 3 + c];
        m[r * 3 + c] = acc * [sx, sy, sz][c];
      }
    }
    const cov = new Float64Array(9);
    for (let r = 0; r < 3; r++) {
      for (let c = 0; c < 3; c++) {
        cov[r * 3 + c] = m[r * 3] * m[c * 3] + m[r * 3 + 1] * m[c * 3 + 1] + m[r * 3 + 2] * m[c * 3 + 2];
      }
    }
    const jx = intr.fx / zc, jy = intr.fy / zc;
    const jxz = -intr.fx * xc / (zc * zc), jyz = -intr.fy * yc / (zc * zc);
    // Sigma2D = J Sigma_cam J^T + lowpass
    const a = jx * (jx * cov[0] + jxz * cov[6]) + jxz * (jx * cov[2] + jxz * cov[8]) + LOWPASS;
    const bq = jx * (jy * cov[1] + jyz * cov[2]) + jxz * (jy * cov[7] + jyz * cov[8]);
    const c2 = jy * (jy * cov[4] + jyz * cov[7]) + jyz * (jy * cov[5] + jyz * cov[8]) + LOWPASS;
    const det = a * c2 - bq * bq;
    if (det <= 0) continue;
    const u = intr.fx * xc / zc + intr.cx;
    const v = intr.fy * yc / zc + intr.cy;

    const mid = 0.5 * (a + c2);
    const lamMax = mid + Math.sqrt(Math.max(mid * mid - det, 0));
    const radius = 3 * Math.sqrt(lamMax) + 1;
    const x0 = Math.max(0, Math.floor(u - radius));
    const x1 = Math.min(intr.width - 1, Math.ceil(u + radius));
    const y0 = Math.max(0, Math.floor(v - radius));
    const y1 = Math.min(intr.height - 1, Math.ceil(v + radius));
    if (x0 > x1 || y0 > y1) continue;

    const dirX = px - center[0], dirY = py - center[1], dirZ = pz - center[2];
    const len = Math.hypot(dirX, dirY, dirZ) || 1;
    shBasis(dirX / len, dirY / len, dirZ / len, basis);
    const color = shColor(s.sh, i * 48, basis);

    out.push({
      index: i, z: zc, u, v,
      ia: c2 / det, ib: -bq / det, ic: a / det,
      opacity: s.opacities[i],
      r: color[0], g: color[1], b: color[2],
      x0, x1, y0, y1,
    });
  }
  return out;
}

export function renderSoft(s: SplatSet, intr: CameraIntrin, pose: CameraPose): SoftImage {
  const { width, height } = intr;
  const rgb = new Float64Array(width * height * 3);
  const splats = projectSplats(s, intr, pose);
  for (let py = 0; py < height; py++) {
    for (let px = 0; px < width; px++) {
      let trans = 1.0;
      let r = 0, g = 0, b = 0;
      for (const sp of splats) {
        if (px < sp.x0 || px > sp.x1 || py < sp.y0 || py > sp.y1) continue;
        const dx = px - sp.u;
        const dy = py - sp.v;
        const q = sp.ia * dx * dx + 2 * sp.ib * dx * dy + sp.ic * dy * dy;
        if (q > CUTOFF_Q) continue;
        let alpha = sp.opacity * Math.exp(-0.5 * q);
        if (alpha > ALPHA_CAP) alpha = ALPHA_CAP;
        const w = alpha * trans;
        r += sp.r * w;
        g += sp.g * w;
        b += sp.b * w;
        trans *= 1 - alpha;
        if (trans < T_STOP) break;
      }
      const base = (py * width + px) * 3;
      rgb[base] = r;
      rgb[base + 1] = g;
      rgb[base + 2] = b;
    }
  }
  return { width, height, rgb };
}
