import { describe, expect, it } from "vitest";
import { join } from "node:path";

import { parseTensor } from "../src/tensor.js";
import { splatsFromRecords, RECORD_FLOATS } from "../src/splats.js";
import { loadPack } from "../src/pack.js";
import { FIXTURES, fileFetcher } from "./helpers.js";

describe("tensor parsing", () => {
  it("round-trips rank/dims/data", () => {
    const dims = [2, 3];
    const data = new Float32Array([1, 2, 3, 4, 5, 6]);
    const buf = new ArrayBuffer(4 + 8 + data.byteLength);
    const view = new DataView(buf);
    view.setUint32(0, 2, true);
    view.setUint32(4, dims[0], true);
    view.setUint32(8, dims[1], true);
    data.forEach((v, i) => view.setFloat32(12 + 4 * i, v, true));
    const t = parseTensor(buf);
    expect(t.dims).toEqual(dims);
    expect(Array.from(t.data)).toEqual(Array.from(data));
  });

  it("rejects wrong record width", () => {
    const t = { dims: [4, 10], data: new Float32Array(40) };
    expect(() => splatsFromRecords(t)).toThrow(/expected/);
  });
});

describe("pack loading", () => {
  it("loads a baked pack with one snapshot per time", async () => {
    const pack = await loadPack(fileFetcher(join(FIXTURES, "pack_baked")));
    expect(pack.meta.mode).toBe("baked");
    expect(pack.baked.size).toBe(pack.meta.times.length);
    const splats = pack.baked.get(0)!;
    expect(splats.count).toBe(pack.meta.splat_count);
    expect(splats.positions.length).toBe(splats.count * 3);
    expect(pack.meta.record_floats).toBe(RECORD_FLOATS);
  });

  it("loads a live pack with field and embedding", async () => {
    const pack = await loadPack(fileFetcher(join(FIXTURES, "pack_live")));
    expect(pack.meta.mode).toBe("live");
    expect(pack.canonical?.count).toBe(pack.meta.splat_count);
    expect(pack.field?.grids.length).toBe(pack.meta.hexplane?.spatial_resolutions.length);
    expect(pack.field?.embedding.length).toBeGreaterThan(0);
    // opacities are valid probabilities
    for (const o of pack.canonical!.opacities) {
      expect(o).toBeGreaterThan(0);
      expect(o).toBeLessThan(1);
    }
  });
});
