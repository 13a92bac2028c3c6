/** Timeline: scrub, play, loop over the pack's normalized time range. */

export class TimelinePlayer {
  time = 0;
  playing = false;
  loop = true;
  speed = 0.35; // normalized time units per second

  scrub(t: number): void {
    this.time = Math.min(Math.max(t, 0), 1);
  }

  toggle(): void {
    this.playing = !this.playing;
  }

  /** Advance by wall-clock dt seconds; returns the current time. */
  tick(dt: number): number {
    if (this.playing) {
      this.time += dt * this.speed;
      if (this.time > 1) {
        if (this.loop) {
          this.time -= Math.floor(this.time);
        } else {
          this.time = 1;
          this.playing = false;
        }
      }
    }
    return this.time;
  }

  /** Nearest baked snapshot index for a list of pack times. */
  nearestIndex(times: number[]): number {
    if (times.length === 0) return 0;
    let best = 0;
    let bestDist = Math.abs(times[0] - this.time);
    for (let i = 1; i < times.length; i++) {
      const d = Math.abs(times[i] - this.time);
      if (d < bestDist) {
        best = i;
        bestDist = d;
      }
    }
    return best;
  }
}
