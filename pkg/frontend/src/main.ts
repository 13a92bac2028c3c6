/** App wiring: load the pack named by ?pack=, drive the renderer with the
 *  orbit camera and the timeline, keep the camera pose in the URL hash. */

import { loadPack, httpFetcher, LoadedPack } from "./pack.js";
import { SplatRenderer } from "./webgl.js";
import { OrbitCamera } from "./camera.js";
import { TimelinePlayer } from "./player.js";
import { CameraIntrin } from "./types.js";
import { SplatSet } from "./splats.js";

function intrinsicsFor(canvas: HTMLCanvasElement): CameraIntrin {
  const width = canvas.clientWidth || 960;
  const height = canvas.clientHeight || 640;
  const f = 0.9 * Math.max(width, height);
  return { fx: f, fy: f, cx: (width - 1) / 2, cy: (height - 1) / 2, width, height };
}

async function start(): Promise<void> {
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const scrub = document.getElementById("time") as HTMLInputElement;
  const playBtn = document.getElementById("play") as HTMLButtonElement;
  const loopBox = document.getElementById("loop") as HTMLInputElement;
  const status = document.getElementById("status") as HTMLSpanElement;

  const packUrl = new URLSearchParams(location.search).get("pack") ?? "pack";
  status.textContent = `loading ${packUrl}…`;
  const pack: LoadedPack = await loadPack(httpFetcher(packUrl));
  status.textContent = `${pack.meta.splat_count} splats (${pack.meta.mode})`;

  const renderer = new SplatRenderer(canvas);
  const player = new TimelinePlayer();
  const fromHash = OrbitCamera.fromUrlHash(location.hash);
  const camera = fromHash?.camera ?? new OrbitCamera();
  if (fromHash) player.scrub(fromHash.time);

  let current: SplatSet =
    pack.meta.mode === "baked" ? pack.baked.get(0)! : pack.canonical!;
  renderer.upload(current);

  let worker: Worker | null = null;
  let pendingTime: number | null = null;
  let busy = false;
  let generation = 0;
  if (pack.meta.mode === "live") {
    worker = new Worker(new URL("./worker.js", import.meta.url), { type: "module" });
    worker.postMessage({ kind: "init", field: pack.field, canonical: pack.canonical });
    worker.onmessage = (ev) => {
      if (ev.data.generation === generation) {
        current = ev.data.splats;
        renderer.upload(current);
      }
      busy = false;
      if (pendingTime !== null) {
        requestDeform(pendingTime);
        pendingTime = null;
      }
    };
  }

  function requestDeform(t: number): void {
    if (!worker) return;
    if (busy) {
      pendingTime = t;
      return;
    }
    busy = true;
    generation += 1;
    worker.postMessage({ kind: "deform", time: t, generation });
  }

  let lastSnapshot = -1;
  function applyTime(t: number): void {
    scrub.value = String(t);
    if (pack.meta.mode === "baked") {
      const idx = player.nearestIndex(pack.meta.times);
      if (idx !== lastSnapshot) {
        lastSnapshot = idx;
        current = pack.baked.get(idx)!;
        renderer.upload(current);
      }
    } else {
      requestDeform(t);
    }
  }

  // input: drag orbits, shift-drag pans, wheel dollies, wasd flies
  let dragging = false;
  canvas.addEventListener("pointerdown", (e) => {
    dragging = true;
    canvas.setPointerCapture(e.pointerId);
  });
  canvas.addEventListener("pointerup", () => (dragging = false));
  canvas.addEventListener("pointermove", (e) => {
    if (!dragging) return;
    if (e.shiftKey) {
      camera.pan(-e.movementX * 0.003, -e.movementY * 0.003);
    } else {
      camera.rotate(e.movementX * 0.005, e.movementY * 0.005);
    }
  });
  canvas.addEventListener("wheel", (e) => {
    e.preventDefault();
    camera.dolly(Math.exp(e.deltaY * 0.001));
  });
  const keys = new Set<string>();
  window.addEventListener("keydown", (e) => keys.add(e.key.toLowerCase()));
  window.addEventListener("keyup", (e) => keys.delete(e.key.toLowerCase()));

  scrub.addEventListener("input", () => {
    player.playing = false;
    player.scrub(Number(scrub.value));
    applyTime(player.time);
  });
  playBtn.addEventListener("click", () => {
    player.toggle();
    playBtn.textContent = player.playing ? "pause" : "play";
  });
  loopBox.addEventListener("change", () => (player.loop = loopBox.checked));

  let lastStamp = performance.now();
  let lastHash = 0;
  function frame(stamp: number): void {
    const dt = (stamp - lastStamp) / 1000;
    lastStamp = stamp;
    const step = dt * 1.5;
    if (keys.has("w")) camera.fly(step, 0, 0);
    if (keys.has("s")) camera.fly(-step, 0, 0);
    if (keys.has("a")) camera.fly(0, -step, 0);
    if (keys.has("d")) camera.fly(0, step, 0);
    if (keys.has("q")) camera.fly(0, 0, step);
    if (keys.has("e")) camera.fly(0, 0, -step);

    if (player.playing) applyTime(player.tick(dt));
    renderer.draw(current, intrinsicsFor(canvas), camera.pose());
    if (stamp - lastHash > 500) {
      history.replaceState(null, "", camera.toUrlHash(player.time));
      lastHash = stamp;
    }
    requestAnimationFrame(frame);
  }
  applyTime(player.time);
  requestAnimationFrame(frame);
}

start().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = String(err);
  console.error(err);
});
