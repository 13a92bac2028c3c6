/** Deformation worker: evaluates the live-mode deformation off the UI
 *  thread. Receives the field once, then answers {time} requests with a
 *  deformed splat buffer (transferred). */

import { DeformField, deformSplats } from "./deform.js";
import { SplatSet } from "./splats.js";

let field: DeformField | null = null;
let canonical: SplatSet | null = null;

interface InitMessage {
  kind: "init";
  field: DeformField;
  canonical: SplatSet;
}

interface DeformMessage {
  kind: "deform";
  time: number;
  generation: number;
}

self.onmessage = (event: MessageEvent<InitMessage | DeformMessage>) => {
  const msg = event.data;
  if (msg.kind === "init") {
    field = msg.field;
    canonical = msg.canonical;
    return;
  }
  if (msg.kind === "deform" && field && canonical) {
    const deformed = deformSplats(canonical, field, msg.time);
    (self as unknown as Worker).postMessage(
      { kind: "deformed", time: msg.time, generation: msg.generation, splats: deformed },
      [deformed.positions.buffer, deformed.rotations.buffer,
       deformed.scales.buffer, deformed.opacities.buffer],
    );
  }
};
