/**
 * The socket seam: the client speaks lines, the transport moves bytes.
 *
 * Browsers cannot open raw TCP sockets, so the same client runs over either
 * a WebSocket (through the bridge, see bridge/bridge.ts) or a direct TCP
 * connection under Node (tests, tooling).  Implementations live in
 * ws-socket.ts and node-socket.ts so the browser bundle never imports
 * node:net.
 */

export interface SocketEvents {
  onOpen: () => void;
  /** One complete line, newline stripped. */
  onLine: (line: string) => void;
  /** reason is null for an orderly close, a description otherwise. */
  onClose: (reason: string | null) => void;
}

export interface SteerSocket {
  /** Send one newline-terminated line. */
  send(line: string): void;
  close(): void;
}

export type SocketFactory = (
  host: string,
  port: number,
  events: SocketEvents,
) => SteerSocket;

/** Reassembles lines from arbitrarily chunked stream data. */
export class LineSplitter {
  private tail = "";

  push(chunk: string): string[] {
    this.tail += chunk;
    const parts = this.tail.split("\n");
    this.tail = parts.pop() ?? "";
    return parts.filter((p) => p.length > 0);
  }

  /** Bytes held back waiting for their newline. */
  get pending(): string {
    return this.tail;
  }
}
