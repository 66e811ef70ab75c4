/**
 * Single-slot mailbox between socket and renderer: holds only the newest
 * frame.  When snapshots arrive faster than the display draws, older frames
 * are overwritten — dropped, never queued — so the view never lags behind
 * the simulation by more than one frame.
 */
export class LatestFrameMailbox<T> {
  private slot: T | null = null;
  /** Frames overwritten before anyone took them (display fell behind). */
  dropped = 0;

  put(item: T): void {
    if (this.slot !== null) this.dropped += 1;
    this.slot = item;
  }

  /** Newest frame, clearing the slot; null when nothing new arrived. */
  take(): T | null {
    const out = this.slot;
    this.slot = null;
    return out;
  }

  peek(): T | null {
    return this.slot;
  }
}
