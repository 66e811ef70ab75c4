/** Direct TCP transport for Node contexts (tests, fixture recording). */
import * as net from "node:net";

import { LineSplitter, SocketFactory } from "./sockets";

export const nodeTcpFactory: SocketFactory = (host, port, events) => {
  const splitter = new LineSplitter();
  const sock = net.connect({ host, port });
  sock.setEncoding("utf8");
  sock.setNoDelay(true);

  let closed = false;
  const closeOnce = (reason: string | null) => {
    if (closed) return;
    closed = true;
    events.onClose(reason);
  };

  sock.on("connect", () => events.onOpen());
  sock.on("data", (chunk: string) => {
    for (const line of splitter.push(chunk)) events.onLine(line);
  });
  sock.on("error", (err: Error) => closeOnce(err.message));
  sock.on("close", () => closeOnce(null));

  return {
    send: (line) => {
      if (!sock.destroyed) sock.write(line);
    },
    close: () => sock.destroy(),
  };
};
