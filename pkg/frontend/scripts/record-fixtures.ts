/**
 * Record protocol fixtures from a real server session.
 *
 * Starts a steering server on a small scene, runs one scripted session that
 * exercises every command, and writes the raw lines of both directions to
 * test/fixtures/.  The protocol tests then validate those recordings against
 * the client schemas — drift on either side of the wire shows up as a
 * fixture violation.
 *
 *   vite-node scripts/record-fixtures.ts
 */
import { ChildProcess, spawn, spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import * as net from "node:net";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { commands, encodeLine } from "../src/protocol";
import { LineSplitter } from "../src/sockets";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "..", "test", "fixtures");

const SCENE_SCRIPT = `
import sys
from springsim import ActuationGroup, save_scene
from springsim.bench import block_scene

scene = block_scene(3)
for m in scene.masses:
    m.v = (0.2, 0.1, 0.05)
scene.groups["legs"] = ActuationGroup("legs", amplitude=0.0, frequency=1.0)
for s in scene.springs[:30]:
    s.group = "legs"
save_scene(scene, sys.argv[1])
`;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function main(): Promise<void> {
  const workdir = mkdtempSync(join(tmpdir(), "steer-record-"));
  const scenePath = join(workdir, "scene.json");
  const built = spawnSync("python3", ["-c", SCENE_SCRIPT, scenePath], { encoding: "utf8" });
  if (built.status !== 0) throw new Error(`scene build failed: ${built.stderr}`);

  const server: ChildProcess = spawn(
    "python3",
    ["-u", "-m", "springsim", "serve", "--scene", scenePath, "--port", "0", "--rate", "30"],
    { stdio: ["ignore", "pipe", "inherit"] },
  );
  const port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("no port announcement")), 30_000);
    let buffered = "";
    server.stdout!.on("data", (chunk: Buffer) => {
      buffered += chunk.toString();
      const match = buffered.match(/steering server on port (\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
  });

  const serverLines: string[] = [];
  const clientLines: string[] = [];
  const splitter = new LineSplitter();
  const sock = net.connect(port, "127.0.0.1");
  sock.setEncoding("utf8");
  sock.on("data", (chunk: string) => serverLines.push(...splitter.push(chunk)));

  const send = (message: Parameters<typeof encodeLine>[0]): void => {
    const line = encodeLine(message);
    clientLines.push(line.trimEnd());
    sock.write(line);
  };
  const errorCount = (): number =>
    serverLines.filter((l) => JSON.parse(l).type === "error").length;

  await new Promise<void>((resolve) => sock.on("connect", () => resolve()));
  send(commands.hello());
  await sleep(300); // a few snapshots

  send(commands.pause());
  await sleep(150);
  send(commands.setDamping(0.1));
  send(commands.applyForce([0, 1], [0.0, 5.0, 0.0]));
  send(commands.setActuation("legs", { amplitude: 0.05 }));
  send(commands.setActuation("legs", { frequency: 2.0 }));
  send(commands.setIntegrator("euler"));
  send(commands.clearForces());
  send(commands.fullStateRequest());
  await sleep(300);
  if (errorCount() > 0) {
    throw new Error(`server rejected a scripted command: ${serverLines.find((l) => l.includes("error"))}`);
  }

  // one deliberately bad command (sent raw, not through the encoder,
  // which would refuse it) so the recording includes an error message
  sock.write('{"type":"command","name":"warp"}\n');
  send(commands.resume());
  await sleep(300);
  send(commands.reset());
  await sleep(300);

  sock.destroy();
  server.kill("SIGTERM");
  rmSync(workdir, { recursive: true, force: true });

  if (errorCount() !== 1) {
    throw new Error(`expected exactly one error line, got ${errorCount()}`);
  }
  const kinds = new Set(serverLines.map((l) => JSON.parse(l).type));
  for (const required of ["hello", "snapshot", "error", "full_state"]) {
    if (!kinds.has(required)) throw new Error(`recording missed a ${required} message`);
  }

  // keep the recording reviewable: cap the snapshot flood, keep everything else
  const kept: string[] = [];
  let snapshots = 0;
  for (const line of serverLines) {
    if (JSON.parse(line).type === "snapshot") {
      snapshots += 1;
      if (snapshots > 12) continue;
    }
    kept.push(line);
  }

  writeFileSync(join(FIXTURES, "server-lines.jsonl"), kept.join("\n") + "\n");
  writeFileSync(join(FIXTURES, "client-lines.jsonl"), clientLines.join("\n") + "\n");
  console.log(
    `recorded ${kept.length} server lines (${Math.min(snapshots, 12)} snapshots kept ` +
      `of ${snapshots}) and ${clientLines.length} client lines`,
  );
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
