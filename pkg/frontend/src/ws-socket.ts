/** WebSocket transport for the browser, pointed at the bridge. */
import { LineSplitter, SocketFactory } from "./sockets";

export const browserWsFactory: SocketFactory = (host, port, events) => {
  const splitter = new LineSplitter();
  const ws = new WebSocket(`ws://${host}:${port}`);

  let closed = false;
  const closeOnce = (reason: string | null) => {
    if (closed) return;
    closed = true;
    events.onClose(reason);
  };

  ws.onopen = () => events.onOpen();
  ws.onmessage = (ev) => {
    // the bridge relays raw stream chunks; reassemble lines here
    for (const line of splitter.push(String(ev.data))) events.onLine(line);
  };
  ws.onerror = () => closeOnce("websocket error");
  ws.onclose = (ev) => closeOnce(ev.wasClean ? null : `closed (code ${ev.code})`);

  return {
    send: (line) => {
      if (ws.readyState === WebSocket.OPEN) ws.send(line);
    },
    close: () => ws.close(),
  };
};
