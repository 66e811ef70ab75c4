/**
 * Connection + session state for one steering server.
 *
 * The client never runs physics: displayed positions and energies come only
 * from received snapshots.  Snapshots land in a latest-frame mailbox for the
 * renderer and are appended to the energy strips; commands go out immediately
 * when live and queue up while connecting.
 */
import { LatestFrameMailbox } from "./mailbox";
import {
  ClientMessage,
  FullState,
  PROTOCOL_VERSION,
  ProtocolViolation,
  Snapshot,
  commands,
  decodeServerLine,
  encodeLine,
} from "./protocol";
import { SocketFactory, SteerSocket } from "./sockets";
import { EnergyStrips } from "./strips";

export type ConnectionStatus = "idle" | "connecting" | "live" | "closed" | "failed";

/** Camera state; owned here so controls, picking, and rendering agree. */
export interface ViewTransform {
  yaw: number;
  pitch: number;
  distance: number;
  target: [number, number, number];
}

export class SteerClient {
  status: ConnectionStatus = "idle";
  /** Inline error/ notice text; null when there is nothing to show. */
  banner: string | null = null;

  readonly mailbox = new LatestFrameMailbox<Snapshot>();
  readonly strips: EnergyStrips;
  /** The frame the UI is showing — advanced only by renderTick(). */
  displayed: Snapshot | null = null;
  lastFullState: FullState | null = null;

  selected = new Set<number>();
  view: ViewTransform = { yaw: 0.7, pitch: 0.4, distance: 6, target: [0, 0, 0] };

  /** Fired after every state change so the shell can refresh. */
  onChange: (() => void) | null = null;

  private socket: SteerSocket | null = null;
  private queue: ClientMessage[] = [];
  private host = "";
  private port = 0;
  /** Set when we close the socket ourselves over a protocol problem. */
  private fatal = false;

  constructor(
    private readonly factory: SocketFactory,
    stripCapacity = 600,
  ) {
    this.strips = new EnergyStrips(stripCapacity);
  }

  get queuedCommands(): number {
    return this.queue.length;
  }

  /** The frame counter the shell displays; null before the first frame. */
  get frame(): number | null {
    return this.displayed ? this.displayed.n : null;
  }

  connect(host: string, port: number): void {
    if (this.status === "connecting" || this.status === "live") return;
    this.host = host;
    this.port = port;
    this.banner = null;
    this.fatal = false;
    this.status = "connecting";
    this.socket = this.factory(host, port, {
      onOpen: () => {
        // server expects the client hello first
        this.socket?.send(encodeLine(commands.hello()));
        this.notify();
      },
      onLine: (line) => this.handleLine(line),
      onClose: (reason) => this.handleClose(reason),
    });
    this.notify();
  }

  /** Reconnect to the last address — the banner's retry button. */
  reconnect(): void {
    if (!this.host) return;
    this.status = "idle";
    this.connect(this.host, this.port);
  }

  disconnect(): void {
    this.socket?.close();
  }

  /** Send when live; queue while connecting; drop with a banner otherwise. */
  send(message: ClientMessage): void {
    if (this.status === "live" && this.socket) {
      this.socket.send(encodeLine(message));
    } else if (this.status === "connecting") {
      this.queue.push(message);
    } else {
      this.banner = "not connected — command discarded";
    }
    this.notify();
  }

  /**
   * Advance the displayed frame to the newest received snapshot, if any.
   * Called once per display refresh; with no new frame the previous one
   * stays (the UI never extrapolates between snapshots).
   */
  renderTick(): Snapshot | null {
    const fresh = this.mailbox.take();
    if (fresh) {
      this.displayed = fresh;
    }
    return this.displayed;
  }

  // ------------------------------------------------------------- internals

  private handleLine(line: string): void {
    let message;
    try {
      message = decodeServerLine(line);
    } catch (err) {
      if (err instanceof ProtocolViolation) {
        this.banner = `protocol error: ${err.message}`;
        this.fatal = true;
        this.socket?.close();
        this.notify();
        return;
      }
      throw err;
    }
    switch (message.type) {
      case "hello":
        if (message.version !== PROTOCOL_VERSION) {
          this.banner =
            `protocol version mismatch: server speaks v${message.version}, ` +
            `this client speaks v${PROTOCOL_VERSION}`;
          this.fatal = true;
          this.socket?.close();
          break;
        }
        this.status = "live";
        for (const queued of this.queue) this.socket?.send(encodeLine(queued));
        this.queue = [];
        break;
      case "snapshot":
        this.mailbox.put(message);
        this.strips.push(message.t, message.energies);
        break;
      case "error":
        // rendered inline; a mid-session command rejection is not fatal
        this.banner = message.text;
        break;
      case "full_state":
        this.lastFullState = message;
        break;
    }
    this.notify();
  }

  private handleClose(reason: string | null): void {
    this.socket = null;
    // a refused handshake or a protocol problem reads as a failure,
    // everything else as a plain disconnect
    if (this.status === "connecting" || this.fatal) {
      this.status = "failed";
      this.banner = this.banner ?? (reason ? `connection failed: ${reason}` : "connection failed");
    } else {
      this.status = "closed";
      this.banner = reason ? `disconnected: ${reason}` : "disconnected";
    }
    this.queue = [];
    this.notify();
  }

  private notify(): void {
    this.onChange?.();
  }
}
