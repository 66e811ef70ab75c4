/**
 * Energy strip charts: four uPlot panels (elastic / gravitational / kinetic /
 * total) fed straight from the client's strip buffers.
 */
import uPlot from "uplot";
import "uplot/dist/uPlot.min.css";

import { EnergyStrips, STRIP_CHANNELS, StripChannel } from "./strips";

const COLORS: Record<StripChannel, string> = {
  elastic: "#d08770",
  gravitational: "#5e81ac",
  kinetic: "#a3be8c",
  total: "#b48ead",
};

export class StripPanels {
  private plots: Map<StripChannel, uPlot> = new Map();

  constructor(container: HTMLElement, width = 320, height = 90) {
    for (const channel of STRIP_CHANNELS) {
      const host = document.createElement("div");
      host.className = "strip";
      container.appendChild(host);
      const plot = new uPlot(
        {
          width,
          height,
          title: channel,
          scales: { x: { time: false } },
          axes: [
            { stroke: "#888", grid: { show: false } },
            { stroke: "#888", size: 56 },
          ],
          series: [
            { label: "t (s)" },
            { label: "J", stroke: COLORS[channel], width: 1.5 },
          ],
          legend: { show: false },
          cursor: { show: false },
        },
        [[], []],
        host,
      );
      this.plots.set(channel, plot);
    }
  }

  update(strips: EnergyStrips): void {
    for (const channel of STRIP_CHANNELS) {
      const { times, values } = strips.series(channel);
      this.plots.get(channel)!.setData([times, values]);
    }
  }
}
