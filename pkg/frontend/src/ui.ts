/**
 * DOM control panel: plain elements wired to a SteerClient.
 *
 * No timers and no physics here — refresh() repaints readouts from client
 * state and is driven by the shell's display loop (or directly by tests).
 * Widget events translate one-to-one into protocol commands.
 */
import { SteerClient } from "./client";
import { commands } from "./protocol";

export interface PanelElements {
  status: HTMLElement;
  banner: HTMLElement;
  reconnect: HTMLButtonElement;
  frame: HTMLElement;
  simTime: HTMLElement;
  throughput: HTMLElement;
  drops: HTMLElement;
  pause: HTMLButtonElement;
  resume: HTMLButtonElement;
  damping: HTMLInputElement;
  dampingReadout: HTMLElement;
  actGroup: HTMLInputElement;
  actAmplitude: HTMLInputElement;
  actFrequency: HTMLInputElement;
  actApply: HTMLButtonElement;
}

/** Find every panel element by id under root; throws on a missing one. */
export function findPanelElements(root: ParentNode): PanelElements {
  const get = <T extends Element>(id: string): T => {
    const el = root.querySelector<T>(`#${id}`);
    if (!el) throw new Error(`control panel is missing #${id}`);
    return el;
  };
  return {
    status: get("status"),
    banner: get("banner"),
    reconnect: get("reconnect"),
    frame: get("frame"),
    simTime: get("sim-time"),
    throughput: get("throughput"),
    drops: get("drops"),
    pause: get("pause"),
    resume: get("resume"),
    damping: get("damping"),
    dampingReadout: get("damping-readout"),
    actGroup: get("act-group"),
    actAmplitude: get("act-amplitude"),
    actFrequency: get("act-frequency"),
    actApply: get("act-apply"),
  };
}

export interface Panel {
  /** Repaint every readout from current client state. */
  refresh(): void;
}

export function wirePanel(el: PanelElements, client: SteerClient): Panel {
  el.pause.addEventListener("click", () => client.send(commands.pause()));
  el.resume.addEventListener("click", () => client.send(commands.resume()));
  el.reconnect.addEventListener("click", () => client.reconnect());

  el.damping.addEventListener("input", () => {
    client.send(commands.setDamping(Number(el.damping.value)));
  });

  el.actApply.addEventListener("click", () => {
    const group = el.actGroup.value.trim();
    const amplitude = el.actAmplitude.value === "" ? undefined : Number(el.actAmplitude.value);
    const frequency = el.actFrequency.value === "" ? undefined : Number(el.actFrequency.value);
    if (!group || (amplitude === undefined && frequency === undefined)) {
      client.banner = "actuation needs a group and an amplitude or frequency";
      refresh();
      return;
    }
    client.send(commands.setActuation(group, { amplitude, frequency }));
  });

  const refresh = () => {
    el.status.textContent = client.status;
    if (client.banner) {
      el.banner.textContent = client.banner;
      el.banner.style.display = "";
    } else {
      el.banner.textContent = "";
      el.banner.style.display = "none";
    }
    el.reconnect.style.display =
      client.status === "failed" || client.status === "closed" ? "" : "none";

    const shown = client.displayed;
    el.frame.textContent = client.frame === null ? "—" : String(client.frame);
    el.simTime.textContent = shown ? `${shown.t.toFixed(4)} s` : "—";
    el.throughput.textContent = shown
      ? `${(shown.throughput / 1e6).toFixed(2)} M springs/s`
      : "—";
    el.drops.textContent = String(client.mailbox.dropped);
    el.dampingReadout.textContent = Number(el.damping.value).toFixed(2);
  };
  refresh();
  return { refresh };
}
