/**
 * Browser entry point: wires client, viewer, strips, and controls together.
 * One requestAnimationFrame loop is the display clock — it takes the newest
 * frame from the mailbox, uploads it, and repaints the readouts.
 */
import { SteerClient } from "./client";
import { StripPanels } from "./panels";
import { commands } from "./protocol";
import { parseTopology } from "./render-core";
import { findPanelElements, wirePanel } from "./ui";
import { Viewer } from "./viewer";
import { browserWsFactory } from "./ws-socket";

const client = new SteerClient(browserWsFactory);
const canvas = document.getElementById("scene") as HTMLCanvasElement;
const viewer = new Viewer(canvas, client);
const panels = new StripPanels(document.getElementById("strips")!);
const panel = wirePanel(findPanelElements(document), client);

// ---------------------------------------------------------------- connect

const hostInput = document.getElementById("host") as HTMLInputElement;
const portInput = document.getElementById("port") as HTMLInputElement;
document.getElementById("connect")!.addEventListener("click", () => {
  client.connect(hostInput.value || "127.0.0.1", Number(portInput.value));
});

// optional topology for spring lines: load the server's scene file locally
const sceneFile = document.getElementById("scene-file") as HTMLInputElement;
const lodReadout = document.getElementById("lod")!;
sceneFile.addEventListener("change", async () => {
  const file = sceneFile.files?.[0];
  if (!file) return;
  try {
    viewer.topology = parseTopology(JSON.parse(await file.text()));
  } catch (err) {
    client.banner = (err as Error).message;
  }
});

const forceScale = document.getElementById("force-scale") as HTMLInputElement;
forceScale.addEventListener("input", () => {
  viewer.forceScale = Number(forceScale.value) || 0;
});

document.getElementById("full-state")!.addEventListener("click", () => {
  client.send(commands.fullStateRequest());
});

// ------------------------------------------------------------ display loop

function frame(): void {
  const snapshot = client.renderTick();
  viewer.draw(snapshot);
  panels.update(client.strips);
  panel.refresh();
  const list = viewer.lastDrawList;
  lodReadout.textContent = list
    ? `${list.drawnSprings} of ${list.drawableSprings} springs drawn`
    : "no topology loaded";
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
