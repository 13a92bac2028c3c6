/** Viewer/engine parity on the fixture packs: mean absolute pixel
 *  difference at most 2/255, and t = 0 on a zero-deformation pack equals
 *  the canonical render. */

import { describe, expect, it } from "vitest";
import { readFile } from "node:fs/promises";
import { join } from "node:path";

import { loadPack } from "../src/pack.js";
import { renderSoft } from "../src/softrender.js";
import { deformSplats } from "../src/deform.js";
import { parseTensor } from "../src/tensor.js";
import { CamerasFile, FIXTURES, asPose, fileFetcher, loadJson, meanAbsDiff } from "./helpers.js";

const BUDGET = 2 / 255;

async function reference(name: string): Promise<Float32Array> {
  const buf = await readFile(join(FIXTURES, name));
  return parseTensor(buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength)).data;
}

describe("baked pack parity", () => {
  it("matches engine renders on every pose/time", async () => {
    const cams = await loadJson<CamerasFile>("cameras.json");
    const refs = await loadJson<Record<string, string>>("references.json");
    const pack = await loadPack(fileFetcher(join(FIXTURES, "pack_baked")));
    for (let pi = 0; pi < cams.poses.length; pi++) {
      for (let ti = 0; ti < cams.times.length; ti++) {
        const splats = pack.baked.get(ti)!;
        const image = renderSoft(splats, cams.intrinsics, asPose(cams.poses[pi]));
        const ref = await reference(refs[`p${pi}_t${ti}`]);
        const diff = meanAbsDiff(image.rgb, ref);
        expect(diff, `pose ${pi} time ${ti}`).toBeLessThan(BUDGET);
      }
    }
  });
});

describe("live pack parity", () => {
  it("client-side deformation matches engine renders", async () => {
    const cams = await loadJson<CamerasFile>("cameras.json");
    const refs = await loadJson<Record<string, string>>("references.json");
    const pack = await loadPack(fileFetcher(join(FIXTURES, "pack_live")));
    for (let ti = 0; ti < cams.times.length; ti++) {
      const deformed = deformSplats(pack.canonical!, pack.field!, cams.times[ti]);
      for (let pi = 0; pi < cams.poses.length; pi++) {
        const image = renderSoft(deformed, cams.intrinsics, asPose(cams.poses[pi]));
        const ref = await reference(refs[`p${pi}_t${ti}`]);
        const diff = meanAbsDiff(image.rgb, ref);
        expect(diff, `pose ${pi} time ${ti}`).toBeLessThan(BUDGET);
      }
    }
  });

  it("live deformation matches the baked snapshots exactly", async () => {
    const live = await loadPack(fileFetcher(join(FIXTURES, "pack_live")));
    const baked = await loadPack(fileFetcher(join(FIXTURES, "pack_baked")));
    for (let ti = 0; ti < live.meta.times.length; ti++) {
      const deformed = deformSplats(live.canonical!, live.field!, live.meta.times[ti]);
      const snapshot = baked.baked.get(ti)!;
      const posDiff = meanAbsDiff(deformed.positions, snapshot.positions);
      expect(posDiff).toBeLessThan(1e-5);
    }
  });
});

describe("zero-deformation pack", () => {
  it("time zero equals the canonical render", async () => {
    const cams = await loadJson<CamerasFile>("cameras.json");
    const refs = await loadJson<Record<string, string>>("references.json");
    const pack = await loadPack(fileFetcher(join(FIXTURES, "pack_zero")));
    const image = renderSoft(pack.baked.get(0)!, cams.intrinsics, asPose(cams.poses[0]));
    const ref = await reference(refs.zero_canonical);
    expect(meanAbsDiff(image.rgb, ref)).toBeLessThan(BUDGET);
  });
});
