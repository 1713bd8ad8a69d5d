// Review-session state machine: pair loading, judgment submission, and
// synchronized two-strip playback. DOM-free so it can be integration-tested
// against a fake backend; the DOM layer in ui.ts renders from snapshots.

import { ApiClient, Dimension, Outcome, PairTask, Progress } from "./api.js";

export type SessionStatus = "idle" | "loading" | "ready" | "done" | "error";

export interface SessionState {
  annotator: string;
  dimension: Dimension;
  status: SessionStatus;
  task: PairTask | null;
  frameIndex: number;
  playing: boolean;
  loop: boolean;
  progress: Progress | null;
  notice: string | null; // transient conflict / validation message
  errorMessage: string | null; // network error banner (with retry)
}

const KEY_OUTCOMES: Record<string, Outcome> = {
  a: "A_WINS",
  t: "TIE",
  b: "B_WINS",
};

export const PLAYBACK_FPS = 8;

type TimerHandle = ReturnType<typeof setInterval>;

export class ReviewSession {
  private state: SessionState;
  private timer: TimerHandle | null = null;
  private listeners: Array<(s: SessionState) => void> = [];

  constructor(
    private readonly api: ApiClient,
    annotator: string,
    dimension: Dimension = "VQ",
  ) {
    this.state = {
      annotator,
      dimension,
      status: "idle",
      task: null,
      frameIndex: 0,
      playing: false,
      loop: true,
      progress: null,
      notice: null,
      errorMessage: null,
    };
  }

  snapshot(): SessionState {
    return { ...this.state };
  }

  onChange(listener: (s: SessionState) => void): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.snapshot());
  }

  /** Frames scrubbable in lockstep: the shorter strip bounds the range. */
  frameCount(): number {
    const task = this.state.task;
    if (!task) return 0;
    return Math.min(task.frame_counts[0], task.frame_counts[1]);
  }

  async loadNext(): Promise<void> {
    this.pause();
    this.update({ status: "loading", errorMessage: null });
    try {
      const [task, progress] = await Promise.all([
        this.api.nextPair(this.state.dimension, this.state.annotator),
        this.api.progress(),
      ]);
      if (task === null) {
        this.update({ status: "done", task: null, progress, frameIndex: 0 });
        return;
      }
      this.update({ status: "ready", task, progress, frameIndex: 0 });
    } catch (err) {
      this.update({
        status: "error",
        errorMessage: err instanceof Error ? err.message : String(err),
      });
    }
  }

  async setDimension(dimension: Dimension): Promise<void> {
    this.update({ dimension });
    await this.loadNext();
  }

  /**
   * Submit one of the three protocol outcomes for the loaded pair.
   * 201 advances; 409 shows a conflict notice and still advances; 400 keeps
   * the pair on screen with a validation notice.
   */
  async submit(outcome: Outcome): Promise<void> {
    const task = this.state.task;
    if (!task || this.state.status !== "ready") return;
    let result;
    try {
      result = await this.api.submitJudgment(
        task,
        this.state.dimension,
        outcome,
        this.state.annotator,
      );
    } catch (err) {
      this.update({
        status: "error",
        errorMessage: err instanceof Error ? err.message : String(err),
      });
      return;
    }
    if (result === "rejected") {
      this.update({ notice: "submission rejected by the backend; not recorded" });
      return;
    }
    this.update({
      notice: result === "conflict" ? "already judged elsewhere; moving on" : null,
    });
    await this.loadNext();
  }

  /** Keyboard shortcuts: a / t / b map to the three outcomes. */
  async handleKey(key: string): Promise<void> {
    const outcome = KEY_OUTCOMES[key.toLowerCase()];
    if (outcome) await this.submit(outcome);
  }

  /** Both strips show the same clamped index. */
  scrub(index: number): void {
    const count = this.frameCount();
    if (count === 0) return;
    const clamped = Math.min(Math.max(Math.trunc(index), 0), count - 1);
    this.update({ frameIndex: clamped });
  }

  jumpToFirst(): void {
    this.scrub(0);
  }

  jumpToLast(): void {
    this.scrub(this.frameCount() - 1);
  }

  play(): void {
    if (this.timer !== null || this.frameCount() === 0) return;
    this.update({ playing: true });
    this.timer = setInterval(() => this.tick(), 1000 / PLAYBACK_FPS);
  }

  pause(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    if (this.state.playing) this.update({ playing: false });
  }

  togglePlay(): void {
    if (this.state.playing) this.pause();
    else this.play();
  }

  private tick(): void {
    const count = this.frameCount();
    if (count === 0) return;
    const next = this.state.frameIndex + 1;
    if (next >= count && !this.state.loop) {
      this.pause();
      return;
    }
    this.update({ frameIndex: next % count });
  }
}
