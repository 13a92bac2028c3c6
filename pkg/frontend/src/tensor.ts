/** Binary tensor format shared with the engine:
 *  u32 rank, u32 dims[rank], float32 little-endian payload. */

export interface Tensor {
  dims: number[];
  data: Float32Array;
}

export function parseTensor(buffer: ArrayBuffer, offset = 0): Tensor {
  const view = new DataView(buffer);
  const rank = view.getUint32(offset, true);
  offset += 4;
  const dims: number[] = [];
  let count = 1;
  for (let i = 0; i < rank; i++) {
    const d = view.getUint32(offset, true);
    dims.push(d);
    count *= d;
    offset += 4;
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = view.getFloat32(offset + 4 * i, true);
  }
  return { dims, data };
}

export function tensorElements(t: Tensor): number {
  return t.dims.reduce((a, b) => a * b, 1);
}
