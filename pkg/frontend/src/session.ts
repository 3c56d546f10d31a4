/** Per-tab session state: current task, progress, submission status.
 *
 * One submission may be in flight at a time; progress is updated
 * optimistically and reconciled against the server whenever the next
 * task is fetched, so a refresh rebuilds everything from the API.
 */

import type { ApiClient, Placement, Task } from "./api";
import { sidePlacement } from "./placement";

export type TaskKind = "realism" | "paired";

export interface SessionSnapshot {
  raterId: string;
  taskKind: TaskKind;
  task: Task | null;
  completed: number;
  submitting: boolean;
  playbackStarted: boolean;
  lastError: string | null;
}

export class Session {
  private task: Task | null = null;
  private completed = 0;
  private submitting = false;
  private playbackStarted = false;
  private lastError: string | null = null;

  constructor(
    private api: ApiClient,
    readonly raterId: string,
    readonly taskKind: TaskKind,
    private placementSeed = 0,
  ) {}

  snapshot(): SessionSnapshot {
    return {
      raterId: this.raterId,
      taskKind: this.taskKind,
      task: this.task,
      completed: this.completed,
      submitting: this.submitting,
      playbackStarted: this.playbackStarted,
      lastError: this.lastError,
    };
  }

  /** Fetch the next task and reconcile the progress counter. */
  async advance(): Promise<Task> {
    this.task = await this.api.nextTask(this.raterId, this.taskKind);
    this.playbackStarted = false;
    this.lastError = null;
    if (this.task.done) this.completed = this.task.completed;
    return this.task;
  }

  /** Called by the player once playback actually begins. */
  markPlaybackStarted(): void {
    this.playbackStarted = true;
  }

  /** Blinded layout for the current paired task. */
  placementForCurrentPair(): Placement {
    const task = this.task;
    if (!task || task.done || task.kind !== "paired") {
      throw new Error("no paired task active");
    }
    return sidePlacement(this.raterId, task.pair_id, this.placementSeed);
  }

  async submitRating(option: string): Promise<void> {
    const task = this.requireTask("realism");
    await this.guarded(() =>
      this.api.submitRating(this.raterId, (task as { video_id: string }).video_id, option),
    );
  }

  async submitJudgment(answer: "yes" | "no"): Promise<void> {
    const task = this.requireTask("paired");
    const placement = this.placementForCurrentPair();
    await this.guarded(() =>
      this.api.submitJudgment(
        this.raterId,
        (task as { pair_id: string }).pair_id,
        answer,
        placement,
      ),
    );
  }

  private requireTask(kind: TaskKind): Task {
    if (!this.task || this.task.done || this.task.kind !== kind) {
      throw new Error(`no ${kind} task active`);
    }
    if (!this.playbackStarted) {
      throw new Error("watch the video before submitting");
    }
    return this.task;
  }

  private async guarded(send: () => Promise<unknown>): Promise<void> {
    if (this.submitting) throw new Error("a submission is already in flight");
    this.submitting = true;
    try {
      await send();
      this.completed += 1; // optimistic; advance() reconciles
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      throw err;
    } finally {
      this.submitting = false;
    }
  }
}
