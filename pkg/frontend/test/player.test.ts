import { describe, expect, it } from "vitest";

import { TimelinePlayer } from "../src/player.js";

describe("timeline", () => {
  it("scrub clamps to [0,1]", () => {
    const p = new TimelinePlayer();
    p.scrub(1.7);
    expect(p.time).toBe(1);
    p.scrub(-0.2);
    expect(p.time).toBe(0);
  });

  it("play advances and loops", () => {
    const p = new TimelinePlayer();
    p.playing = true;
    p.speed = 0.5;
    p.tick(1.0);
    expect(p.time).toBeCloseTo(0.5, 10);
    p.tick(1.2); // wraps past 1.0
    expect(p.time).toBeCloseTo(0.1, 10);
    expect(p.playing).toBe(true);
  });

  it("without loop it parks at the end", () => {
    const p = new TimelinePlayer();
    p.playing = true;
    p.loop = false;
    p.speed = 1;
    p.tick(2.0);
    expect(p.time).toBe(1);
    expect(p.playing).toBe(false);
  });

  it("nearest snapshot picks the closest pack time", () => {
    const p = new TimelinePlayer();
    p.scrub(0.45);
    expect(p.nearestIndex([0.0, 0.4, 0.8])).toBe(1);
    p.scrub(0.65);
    expect(p.nearestIndex([0.0, 0.4, 0.8])).toBe(2);
  });
});
