/** Real spherical harmonics basis, order 3 (16 coefficients), matching the
 *  engine's convention. */

const C0 = 0.28209479177387814;
const C1 = 0.4886025119029199;
const C2 = [1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
  -1.0925484305920792, 0.5462742152960396];
const C3 = [-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
  0.3731763325901154, -0.4570457994644658, 1.445305721320277,
  -0.5900435899266435];

export const SH_COEFFS = 16;

export function shBasis(x: number, y: number, z: number, out: Float64Array): void {
  out[0] = C0;
  out[1] = -C1 * y;
  out[2] = C1 * z;
  out[3] = -C1 * x;
  const xx = x * x, yy = y * y, zz = z * z;
  out[4] = C2[0] * x * y;
  out[5] = C2[1] * y * z;
  out[6] = C2[2] * (2 * zz - xx - yy);
  out[7] = C2[3] * x * z;
  out[8] = C2[4] * (xx - yy);
  out[9] = C3[0] * y * (3 * xx - yy);
  out[10] = C3[1] * x * y * z;
  out[11] = C3[2] * y * (4 * zz - xx - yy);
  out[12] = C3[3] * z * (2 * zz - 3 * xx - 3 * yy);
  out[13] = C3[4] * x * (4 * zz - xx - yy);
  out[14] = C3[5] * z * (xx - yy);
  out[15] = C3[6] * x * (xx - 3 * yy);
}

/** Color for one splat: coefficient layout (16, 3) flattened row-major. */
export function shColor(
  coeffs: Float32Array, offset: number, basis: Float64Array,
): [number, number, number] {
  let r = 0, g = 0, b = 0;
  for (let m = 0; m < SH_COEFFS; m++) {
    const w = basis[m];
    r += w * coeffs[offset + 3 * m];
    g += w * coeffs[offset + 3 * m + 1];
    b += w * coeffs[offset + 3 * m + 2];
  }
  return [r, g, b];
}
