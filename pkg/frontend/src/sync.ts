/** Keeps two media players in lockstep for side-by-side review.
 *
 * The left player is the clock; play, pause, and seek fan out to both,
 * and a drift check re-aligns the follower whenever it falls more than
 * one frame behind or ahead.
 */

export interface MediaElementLike {
  currentTime: number;
  readonly duration: number;
  readonly paused: boolean;
  play(): Promise<void> | void;
  pause(): void;
}

export class DualPlayerSync {
  constructor(
    readonly leader: MediaElementLike,
    readonly follower: MediaElementLike,
    readonly fps: number = 25,
  ) {
    if (fps <= 0) throw new Error("fps must be positive");
  }

  /** One frame period: the sync contract's alignment tolerance. */
  get toleranceSec(): number {
    return 1 / this.fps;
  }

  async play(): Promise<void> {
    this.alignFollower();
    await Promise.all([this.leader.play(), this.follower.play()]);
  }

  pause(): void {
    this.leader.pause();
    this.follower.pause();
    this.alignFollower();
  }

  /** Seek both players; `fraction` is 0..1 of the leader's duration. */
  seekFraction(fraction: number): void {
    const f = Math.min(1, Math.max(0, fraction));
    this.seekTo(f * this.leader.duration);
  }

  seekTo(timeSec: number): void {
    this.leader.currentTime = timeSec;
    this.follower.currentTime = timeSec;
    this.alignFollower();
  }

  /** True when the players are within one frame of each other. */
  inSync(): boolean {
    return (
      Math.abs(this.leader.currentTime - this.follower.currentTime) <=
      this.toleranceSec
    );
  }

  /** Snap the follower onto the leader's clock if it drifted. */
  alignFollower(): void {
    if (!this.inSync()) {
      this.follower.currentTime = this.leader.currentTime;
    }
  }
}
