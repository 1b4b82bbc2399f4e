// Focus-aware stopwatch: annotation time only accumulates while the editor
// window is focused, so the elapsed seconds saved into the annotation
// metadata reflect actual labeling effort.

export class FocusStopwatch {
  private startedAt: number | null = null;
  private accumulatedMs = 0;

  constructor(private readonly now: () => number = () => Date.now()) {}

  focus(): void {
    if (this.startedAt === null) this.startedAt = this.now();
  }

  blur(): void {
    if (this.startedAt !== null) {
      this.accumulatedMs += this.now() - this.startedAt;
      this.startedAt = null;
    }
  }

  /** Seconds accumulated so far (running segment included). */
  elapsedSeconds(): number {
    const running = this.startedAt === null ? 0 : this.now() - this.startedAt;
    return (this.accumulatedMs + running) / 1000;
  }

  /** Drain the counter, returning the seconds since the last take. */
  take(): number {
    const seconds = this.elapsedSeconds();
    this.accumulatedMs = 0;
    if (this.startedAt !== null) this.startedAt = this.now();
    return seconds;
  }

  attach(target: Window): () => void {
    const onFocus = () => this.focus();
    const onBlur = () => this.blur();
    target.addEventListener("focus", onFocus);
    target.addEventListener("blur", onBlur);
    if (target.document.hasFocus()) this.focus();
    return () => {
      target.removeEventListener("focus", onFocus);
      target.removeEventListener("blur", onBlur);
    };
  }
}
