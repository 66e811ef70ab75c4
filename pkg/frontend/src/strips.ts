/**
 * Rolling time series for the energy strip charts.
 *
 * Every received snapshot is recorded (recording is independent of the
 * render mailbox, which may drop frames): the strips are a log of what the
 * server reported, with the snapshot's energy fields used verbatim and the
 * total as their sum.
 */

export const STRIP_CHANNELS = ["elastic", "gravitational", "kinetic", "total"] as const;
export type StripChannel = (typeof STRIP_CHANNELS)[number];

export class EnergyStrips {
  readonly capacity: number;
  private times: number[] = [];
  private data: Record<StripChannel, number[]> = {
    elastic: [],
    gravitational: [],
    kinetic: [],
    total: [],
  };

  constructor(capacity = 600) {
    if (capacity < 2) throw new Error("strip capacity must be at least 2");
    this.capacity = capacity;
  }

  get length(): number {
    return this.times.length;
  }

  /** Record one snapshot's [elastic, gravitational, kinetic] at time t. */
  push(t: number, energies: readonly [number, number, number]): void {
    const [epe, gpe, ke] = energies;
    this.times.push(t);
    this.data.elastic.push(epe);
    this.data.gravitational.push(gpe);
    this.data.kinetic.push(ke);
    this.data.total.push(epe + gpe + ke);
    if (this.times.length > this.capacity) {
      this.times.shift();
      for (const channel of STRIP_CHANNELS) this.data[channel].shift();
    }
  }

  /** Chronological copy of one channel alongside its time axis. */
  series(channel: StripChannel): { times: number[]; values: number[] } {
    return { times: [...this.times], values: [...this.data[channel]] };
  }

  latest(channel: StripChannel): number | null {
    const values = this.data[channel];
    return values.length ? values[values.length - 1]! : null;
  }

  clear(): void {
    this.times = [];
    for (const channel of STRIP_CHANNELS) this.data[channel] = [];
  }
}
