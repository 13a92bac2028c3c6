/** Viewer pack loading. The fetcher abstracts fetch() (browser) vs fs
 *  (tests); paths are relative to the pack directory. */

import { PackMeta } from "./types.js";
import { Tensor, parseTensor } from "./tensor.js";
import { SplatSet, splatsFromRecords } from "./splats.js";
import { DeformField } from "./deform.js";

export type Fetcher = (relPath: string) => Promise<ArrayBuffer>;

export interface LoadedPack {
  meta: PackMeta;
  baked: Map<number, SplatSet>; // time index -> snapshot (baked mode)
  canonical?: SplatSet;         // live mode
  field?: DeformField;          // live mode
}

export async function loadPack(fetcher: Fetcher): Promise<LoadedPack> {
  const metaBuf = await fetcher("pack.json");
  const meta: PackMeta = JSON.parse(new TextDecoder().decode(metaBuf));
  const pack: LoadedPack = { meta, baked: new Map() };
  if (meta.mode === "baked") {
    for (let j = 0; j < meta.times.length; j++) {
      const rel = meta.files[`time_${j}`];
      pack.baked.set(j, splatsFromRecords(parseTensor(await fetcher(rel))));
    }
  } else if (meta.mode === "live") {
    pack.canonical = splatsFromRecords(parseTensor(await fetcher(meta.files.canonical)));
    if (!meta.hexplane || !meta.field_bbox) {
      throw new Error("live pack missing hexplane metadata");
    }
    const levels = meta.hexplane.spatial_resolutions.length;
    const grids: Tensor[][] = [];
    for (let lv = 0; lv < levels; lv++) {
      const row: Tensor[] = [];
      for (let pl = 0; pl < 6; pl++) {
        row.push(parseTensor(await fetcher(meta.files[`hexplane_${lv}_${pl}`])));
      }
      grids.push(row);
    }
    const decoder: Record<string, Tensor> = {};
    for (const name of ["w1", "b1", "w2", "b2", "w_dx", "b_dx", "w_dr", "b_dr",
      "w_ds", "b_ds", "g_dx", "g_dr", "g_ds"]) {
      decoder[name] = parseTensor(await fetcher(meta.files[`decoder_${name}`]));
    }
    const embedding = parseTensor(await fetcher(meta.files.embedding)).data;
    pack.field = {
      meta: meta.hexplane,
      bboxLo: meta.field_bbox.lo,
      bboxHi: meta.field_bbox.hi,
      grids,
      decoder,
      embedding,
    };
  } else {
    throw new Error(`unknown pack mode ${(meta as PackMeta).mode}`);
  }
  return pack;
}

export function httpFetcher(baseUrl: string): Fetcher {
  return async (rel) => {
    const res = await fetch(`${baseUrl.replace(/\/$/, "")}/${rel}`);
    if (!res.ok) throw new Error(`fetch ${rel}: ${res.status}`);
    return res.arrayBuffer();
  };
}
