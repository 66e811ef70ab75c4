// @vitest-environment happy-dom
import { describe, expect, it } from "vitest";

import { SteerClient } from "../src/client";
import { PROTOCOL_VERSION } from "../src/protocol";
import { SocketEvents, SteerSocket } from "../src/sockets";
import { wirePanel } from "../src/ui";
import { mountPanel } from "./panel-dom";

class FakeSocket implements SteerSocket {
  sent: string[] = [];
  constructor(readonly events: SocketEvents) {}
  send(line: string): void {
    this.sent.push(line);
  }
  close(): void {
    this.events.onClose(null);
  }
}

function liveHarness() {
  let sock: FakeSocket | undefined;
  const client = new SteerClient((_h, _p, events) => (sock = new FakeSocket(events)));
  const el = mountPanel();
  const panel = wirePanel(el, client);
  client.connect("127.0.0.1", 1);
  sock!.events.onOpen();
  sock!.events.onLine(JSON.stringify({ type: "hello", version: PROTOCOL_VERSION }));
  return { client, el, panel, sock: sock! };
}

function lastSent(sock: FakeSocket): Record<string, unknown> {
  return JSON.parse(sock.sent[sock.sent.length - 1]!);
}

describe("control panel", () => {
  it("pause and resume buttons emit their commands", () => {
    const { el, sock } = liveHarness();
    el.pause.click();
    expect(lastSent(sock)).toEqual({ type: "command", name: "pause" });
    el.resume.click();
    expect(lastSent(sock)).toEqual({ type: "command", name: "resume" });
  });

  it("the damping slider emits set_damping with the slider value", () => {
    const { el, sock } = liveHarness();
    el.damping.value = "0.25";
    el.damping.dispatchEvent(new Event("input"));
    expect(lastSent(sock)).toEqual({ type: "command", name: "set_damping", value: 0.25 });
  });

  it("the actuation form emits set_actuation and guards empty input", () => {
    const { el, sock, panel } = liveHarness();
    const before = sock.sent.length;
    el.actApply.click(); // nothing filled in: no command, banner instead
    expect(sock.sent.length).toBe(before);
    expect(document.getElementById("banner")!.textContent).toContain("actuation");

    el.actGroup.value = "legs";
    el.actAmplitude.value = "0.3";
    el.actApply.click();
    expect(lastSent(sock)).toEqual({
      type: "command",
      name: "set_actuation",
      group: "legs",
      amplitude: 0.3,
    });
    panel.refresh();
  });

  it("readouts show the displayed frame, not the newest arrival", () => {
    const { client, el, panel, sock } = liveHarness();
    panel.refresh();
    expect(el.frame.textContent).toBe("—");
    sock.events.onLine(
      JSON.stringify({
        type: "snapshot",
        t: 0.5,
        n: 5000,
        positions: [],
        energies: [1, 2, 3],
        throughput: 2.5e6,
      }),
    );
    panel.refresh(); // no renderTick yet: the arrival is not displayed
    expect(el.frame.textContent).toBe("—");
    client.renderTick();
    panel.refresh();
    expect(el.frame.textContent).toBe("5000");
    expect(el.simTime.textContent).toBe("0.5000 s");
    expect(el.throughput.textContent).toBe("2.50 M springs/s");
  });

  it("banner and reconnect button appear when the connection drops", () => {
    const { client, el, panel, sock } = liveHarness();
    panel.refresh();
    expect(el.banner.style.display).toBe("none");
    expect(el.reconnect.style.display).toBe("none");
    sock.events.onClose("read ECONNRESET");
    panel.refresh();
    expect(el.banner.style.display).not.toBe("none");
    expect(el.banner.textContent).toContain("ECONNRESET");
    expect(el.reconnect.style.display).not.toBe("none");
    expect(el.status.textContent).toBe("closed");
    void client;
  });
});
