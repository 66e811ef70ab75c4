/**
 * WebSocket-to-TCP bridge: browsers cannot open raw TCP sockets, so this
 * relays bytes verbatim between a browser WebSocket and the steering
 * server's TCP port.  One TCP connection per WebSocket client; framing is
 * untouched (the client reassembles lines itself).
 *
 *   vite-node bridge/bridge.ts -- --tcp-port 7864 [--tcp-host 127.0.0.1]
 *                                 [--ws-port 7865]
 */
import * as net from "node:net";
import { parseArgs } from "node:util";

import { WebSocketServer, WebSocket } from "ws";

const { values } = parseArgs({
  options: {
    "tcp-host": { type: "string", default: "127.0.0.1" },
    "tcp-port": { type: "string" },
    "ws-port": { type: "string", default: "7865" },
  },
});

if (!values["tcp-port"]) {
  console.error("usage: bridge --tcp-port <steering server port> [--ws-port 7865]");
  process.exit(1);
}
const tcpHost = values["tcp-host"]!;
const tcpPort = Number(values["tcp-port"]);
const wsPort = Number(values["ws-port"]);

const server = new WebSocketServer({ port: wsPort });
server.on("listening", () => {
  // report the bound port, not the requested one, so --ws-port 0 is usable
  const addr = server.address();
  const bound = typeof addr === "object" && addr !== null ? addr.port : wsPort;
  console.log(`bridge: ws://127.0.0.1:${bound} <-> tcp ${tcpHost}:${tcpPort}`);
});

server.on("connection", (ws: WebSocket, req) => {
  const who = req.socket.remoteAddress ?? "?";
  const tcp = net.connect({ host: tcpHost, port: tcpPort });
  tcp.setNoDelay(true);
  console.log(`bridge: ${who} connected`);

  ws.on("message", (data) => {
    if (!tcp.destroyed) tcp.write(data.toString());
  });
  tcp.on("data", (chunk) => {
    if (ws.readyState === WebSocket.OPEN) ws.send(chunk.toString());
  });

  const teardown = (why: string) => {
    console.log(`bridge: ${who} ${why}`);
    tcp.destroy();
    if (ws.readyState === WebSocket.OPEN) ws.close();
  };
  ws.on("close", () => teardown("websocket closed"));
  ws.on("error", (err) => teardown(`websocket error: ${err.message}`));
  tcp.on("close", () => teardown("tcp closed"));
  tcp.on("error", (err: Error) => teardown(`tcp error: ${err.message}`));
});
