import { readFile } from "node:fs/promises";
import { join } from "node:path";
import { Fetcher } from "../src/pack.js";
import { CameraIntrin, CameraPose } from "../src/types.js";

export const FIXTURES = join(__dirname, "fixtures");

export function fileFetcher(dir: string): Fetcher {
  return async (rel) => {
    const buf = await readFile(join(dir, rel));
    return buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength);
  };
}

export async function loadJson<T>(rel: string): Promise<T> {
  return JSON.parse(await readFile(join(FIXTURES, rel), "utf-8")) as T;
}

export interface CamerasFile {
  intrinsics: CameraIntrin;
  poses: { rotation: number[]; translation: number[] }[];
  times: number[];
}

export function asPose(p: { rotation: number[]; translation: number[] }): CameraPose {
  return {
    rotation: p.rotation as CameraPose["rotation"],
    translation: p.translation as CameraPose["translation"],
  };
}

export function meanAbsDiff(a: ArrayLike<number>, b: ArrayLike<number>): number {
  let acc = 0;
  for (let i = 0; i < a.length; i++) acc += Math.abs(a[i] - b[i]);
  return acc / a.length;
}
