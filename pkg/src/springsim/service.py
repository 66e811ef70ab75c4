"""Live steering server: newline-delimited JSON over TCP, protocol v1.

One simulation thread owns the engine and is the only place engine state is
touched.  Per-client reader threads validate incoming lines and forward
commands through a queue; the simulation thread drains that queue between
steps (never mid-step), so every command lands on a step boundary.  Snapshots
are encoded once per emission and fanned out, so all viewers see identical
bytes.

Message types: ``hello{version}``, ``snapshot{t,n,positions,energies,
throughput}``, ``command{name,...}``, ``error{text}``,
``full_state_request`` / ``full_state``.  Connections open with a ``hello``
exchange; a version mismatch is refused with an error naming both versions.
"""

from __future__ import annotations

import copy
import json
import math
import queue
import socket
import threading
import time
from dataclasses import dataclass, field

from .engine import INTEGRATORS, SERIAL, VERLET, DivergenceError, Engine
from .model import Scene

PROTOCOL_VERSION = 1

_OUTBOX_LIMIT = 256  # snapshots a slow client may lag before being dropped


class ProtocolError(ValueError):
    """A message that does not follow the wire protocol."""


def encode_message(message: dict) -> bytes:
    """One protocol message as a newline-terminated JSON line."""
    if "type" not in message:
        raise ProtocolError("message must carry a 'type' field")
    try:
        return (json.dumps(message, separators=(",", ":"),
                           allow_nan=False) + "\n").encode()
    except ValueError as exc:
        raise ProtocolError(f"unencodable message: {exc}") from exc


def decode_message(line: bytes | str) -> dict:
    """Parse one line back into a message dict; malformed input raises."""
    if isinstance(line, bytes):
        try:
            line = line.decode()
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"undecodable bytes: {exc}") from exc
    try:
        message = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed message: {exc}") from exc
    if not isinstance(message, dict):
        raise ProtocolError("message must be an object")
    kind = message.get("type")
    if not isinstance(kind, str):
        raise ProtocolError("message must carry a string 'type' field")
    return message


# --------------------------------------------------------- command checking

def _require_number(payload: dict, key: str) -> float:
    value = payload.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)) \
            or not math.isfinite(value):
        raise ProtocolError(f"command field {key!r} must be a finite number")
    return float(value)


def _require_vec3(payload: dict, key: str) -> list[float]:
    value = payload.get(key)
    if not isinstance(value, list) or len(value) != 3:
        raise ProtocolError(f"command field {key!r} must be three numbers")
    out = []
    for c in value:
        if isinstance(c, bool) or not isinstance(c, (int, float)) \
                or not math.isfinite(c):
            raise ProtocolError(f"command field {key!r} must be three numbers")
        out.append(float(c))
    return out


def validate_command(message: dict) -> dict:
    """Structural check of a ``command`` message; returns a normalized copy.

    Only shape and types are verified here (reader threads call this);
    semantic range checks run on the simulation thread when applied.
    """
    name = message.get("name")
    if not isinstance(name, str):
        raise ProtocolError("command must carry a string 'name' field")
    out = {"name": name}
    if name in ("pause", "resume", "reset", "clear_forces"):
        pass
    elif name == "set_damping":
        out["value"] = _require_number(message, "value")
    elif name == "apply_force":
        ids = message.get("ids")
        if not isinstance(ids, list) or not ids \
                or not all(isinstance(i, int) and not isinstance(i, bool)
                           for i in ids):
            raise ProtocolError("command field 'ids' must be a non-empty "
                                "list of mass ids")
        out["ids"] = list(ids)
        out["force"] = _require_vec3(message, "force")
    elif name == "set_actuation":
        group = message.get("group")
        if not isinstance(group, str):
            raise ProtocolError("command field 'group' must be a string")
        out["group"] = group
        for key in ("amplitude", "frequency"):
            if key in message:
                out[key] = _require_number(message, key)
        if "amplitude" not in out and "frequency" not in out:
            raise ProtocolError("set_actuation needs an amplitude or a "
                                "frequency")
    elif name == "set_integrator":
        integrator = message.get("integrator")
        if integrator not in INTEGRATORS:
            raise ProtocolError(
                f"unknown integrator {integrator!r}; expected one of "
                f"{list(INTEGRATORS)}")
        out["integrator"] = integrator
    else:
        raise ProtocolError(f"unknown command {name!r}")
    return out


# ------------------------------------------------------------------ server

@dataclass
class _Client:
    sock: socket.socket
    outbox: queue.Queue = field(default_factory=lambda: queue.Queue(_OUTBOX_LIMIT))
    alive: bool = True

    def send(self, payload: bytes) -> bool:
        """Queue bytes for the writer thread; False if the client lags."""
        try:
            self.outbox.put_nowait(payload)
            return True
        except queue.Full:
            self.alive = False
            return False


class SteerServer:
    """Owns one engine and serves it to any number of viewers.

    ``port=0`` binds an ephemeral port (see ``.port`` after ``start()``).
    ``reset`` restores the scene, integrator, and steering state the server
    was constructed with.
    """

    def __init__(self, scene: Scene, port: int = 0, rate: float = 20.0,
                 decimate: int = 1, integrator: str = VERLET,
                 mode: str = SERIAL, threads: int | None = None):
        if rate <= 0.0:
            raise ValueError("rate must be positive")
        if decimate < 1:
            raise ValueError("decimate must be >= 1")
        self._scene = copy.deepcopy(scene)
        self._requested_port = port
        self.rate = float(rate)
        self.decimate = int(decimate)
        self._initial_integrator = integrator
        self._mode = mode
        self._threads = threads
        self.engine = Engine(self._scene, integrator=integrator, mode=mode,
                             threads=threads)
        self._baseline_f_ext = self.engine.f_ext.copy()

        self.paused = False
        self._halted = False  # a divergence froze the engine; reset clears it
        self._running = False
        self._listener: socket.socket | None = None
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._inbound: queue.Queue = queue.Queue()
        self._threads_started: list[threading.Thread] = []

    # ------------------------------------------------------------ lifecycle

    @property
    def port(self) -> int:
        if self._listener is None:
            raise RuntimeError("server not started")
        return self._listener.getsockname()[1]

    def start(self) -> None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind(("127.0.0.1", self._requested_port))
        listener.listen()
        listener.settimeout(0.1)
        self._listener = listener
        self._running = True
        for target, name in ((self._accept_loop, "steer-accept"),
                             (self._sim_loop, "steer-sim")):
            thread = threading.Thread(target=target, name=name, daemon=True)
            thread.start()
            self._threads_started.append(thread)

    def stop(self) -> None:
        self._running = False
        for thread in self._threads_started:
            thread.join(timeout=5.0)
        if self._listener is not None:
            self._listener.close()
        with self._clients_lock:
            clients, self._clients = self._clients, []
        for client in clients:
            client.alive = False
            try:
                client.sock.close()
            except OSError:
                pass

    def run_forever(self) -> None:
        try:
            while self._running:
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    # ------------------------------------------------------------- net side

    def _accept_loop(self) -> None:
        while self._running:
            try:
                sock, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            sock.settimeout(10.0)
            threading.Thread(target=self._client_session, args=(sock,),
                             daemon=True).start()

    def _client_session(self, sock: socket.socket) -> None:
        client = _Client(sock)
        reader = sock.makefile("rb")
        try:
            if not self._handshake(sock, reader):
                return
            writer = threading.Thread(target=self._writer_loop,
                                      args=(client,), daemon=True)
            writer.start()
            with self._clients_lock:
                self._clients.append(client)
            self._reader_loop(client, reader)
        finally:
            client.alive = False
            with self._clients_lock:
                if client in self._clients:
                    self._clients.remove(client)
            try:
                sock.close()
            except OSError:
                pass

    def _handshake(self, sock: socket.socket, reader) -> bool:
        try:
            line = reader.readline()
            if not line:
                return False
            hello = decode_message(line)
            if hello["type"] != "hello":
                raise ProtocolError("first message must be 'hello'")
            version = hello.get("version")
            if version != PROTOCOL_VERSION:
                raise ProtocolError(
                    f"protocol version mismatch: client speaks "
                    f"{version!r}, server speaks {PROTOCOL_VERSION}")
        except ProtocolError as exc:
            self._send_now(sock, {"type": "error", "text": str(exc)})
            return False
        except OSError:
            return False
        return self._send_now(
            sock, {"type": "hello", "version": PROTOCOL_VERSION})

    @staticmethod
    def _send_now(sock: socket.socket, message: dict) -> bool:
        try:
            sock.sendall(encode_message(message))
            return True
        except OSError:
            return False

    def _reader_loop(self, client: _Client, reader) -> None:
        while self._running and client.alive:
            try:
                line = reader.readline()
            except OSError:
                return
            if not line:
                return
            if not line.strip():
                continue
            try:
                message = decode_message(line)
                kind = message["type"]
                if kind == "command":
                    self._inbound.put((client, validate_command(message)))
                elif kind == "full_state_request":
                    self._inbound.put((client, {"name": "_full_state"}))
                else:
                    raise ProtocolError(f"unexpected message type {kind!r}")
            except ProtocolError as exc:
                # this client's mistake stays this client's problem
                client.send(encode_message({"type": "error", "text": str(exc)}))

    def _writer_loop(self, client: _Client) -> None:
        while client.alive and self._running:
            try:
                payload = client.outbox.get(timeout=0.1)
            except queue.Empty:
                continue
            try:
                client.sock.sendall(payload)
            except OSError:
                client.alive = False
                return

    def _broadcast(self, payload: bytes) -> None:
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.send(payload)

    # ------------------------------------------------------------- sim side

    def _sim_loop(self) -> None:
        interval = 1.0 / self.rate
        next_emit = time.perf_counter() + interval
        steps_since_emit = 0
        work_started = time.perf_counter()
        while self._running:
            self._drain_inbound()
            if not self.paused:
                try:
                    self.engine.step(1)
                    steps_since_emit += 1
                except DivergenceError as exc:
                    # state is non-finite now: report once, freeze, and stop
                    # snapshotting (the positions are not representable)
                    self._broadcast(encode_message(
                        {"type": "error", "text": f"simulation halted: {exc}"}))
                    self.paused = True
                    self._halted = True
            else:
                time.sleep(min(0.002, interval))
            now = time.perf_counter()
            if now >= next_emit:
                if not self._halted:
                    wall = max(now - work_started, 1e-9)
                    throughput = (self.engine.spring_count * steps_since_emit
                                  / wall)
                    self._broadcast(self._snapshot_bytes(throughput))
                next_emit += interval
                if next_emit < now:  # fell behind; skip the missed slots
                    next_emit = now + interval
                steps_since_emit = 0
                work_started = time.perf_counter()

    def _snapshot_bytes(self, throughput: float) -> bytes:
        engine = self.engine
        ids = range(0, len(engine.x), self.decimate)
        epe, gpe, ke, _ = engine.energies()
        return encode_message({
            "type": "snapshot",
            "t": engine.t,
            "n": engine.n,
            "positions": [[i, *map(float, engine.x[i])] for i in ids],
            "energies": [epe, gpe, ke],
            "throughput": throughput,
        })

    def _full_state_bytes(self) -> bytes:
        engine = self.engine
        return encode_message({
            "type": "full_state",
            "t": engine.t,
            "n": engine.n,
            "positions": [[i, *map(float, engine.x[i])]
                          for i in range(len(engine.x))],
            "velocities": [[i, *map(float, engine.v[i])]
                           for i in range(len(engine.v))],
        })

    def _drain_inbound(self) -> None:
        while True:
            try:
                client, command = self._inbound.get_nowait()
            except queue.Empty:
                return
            try:
                self._apply(client, command)
            except (ValueError, KeyError) as exc:
                client.send(encode_message({"type": "error", "text": str(exc)}))

    def _apply(self, client: _Client, command: dict) -> None:
        name = command["name"]
        engine = self.engine
        if name == "_full_state":
            client.send(self._full_state_bytes())
        elif name == "pause":
            self.paused = True
        elif name == "resume":
            self.paused = False
        elif name == "reset":
            # restores scene, integrator, and steering; an operator's pause
            # survives so a paused reset can be inspected before resuming
            self.engine = Engine(self._scene,
                                 integrator=self._initial_integrator,
                                 mode=self._mode, threads=self._threads)
            self._baseline_f_ext = self.engine.f_ext.copy()
            self._halted = False
        elif name == "set_damping":
            engine.set_damping(command["value"])
        elif name == "apply_force":
            n = len(engine.x)
            for mass_id in command["ids"]:
                if not 0 <= mass_id < n:
                    raise ValueError(f"mass id {mass_id} out of range "
                                     f"(scene has {n} masses)")
            for mass_id in command["ids"]:
                engine.set_external_force(mass_id, command["force"])
        elif name == "clear_forces":
            engine.f_ext[:] = self._baseline_f_ext
        elif name == "set_actuation":
            engine.set_actuation(command["group"],
                                 amplitude=command.get("amplitude"),
                                 frequency=command.get("frequency"))
        elif name == "set_integrator":
            self.engine = self._rebuilt_engine(command["integrator"])

    def _rebuilt_engine(self, integrator: str) -> Engine:
        """Fresh engine with the new stepper, carrying the live state over."""
        old = self.engine
        new = Engine(self._scene, integrator=integrator, mode=self._mode,
                     threads=self._threads)
        new.x[:] = old.x
        new.v[:] = old.v
        new.x_prev = None if old.x_prev is None else old.x_prev.copy()
        new.t, new.n = old.t, old.n
        new.f_ext[:] = old.f_ext
        new.damping = old.damping
        new.gravity = old.gravity.copy()
        new.gpe_datum = old.gpe_datum
        for label, group in old._groups.items():
            for key in ("amplitude", "frequency", "phase"):
                new._groups[label][key] = group[key]
        return new


def serve(scene: Scene, port: int = 7864, rate: float = 20.0,
          decimate: int = 1, integrator: str = VERLET, mode: str = SERIAL,
          threads: int | None = None) -> None:
    """Run a steering server until interrupted (the ``serve`` subcommand)."""
    server = SteerServer(scene, port=port, rate=rate, decimate=decimate,
                         integrator=integrator, mode=mode, threads=threads)
    server.start()
    print(f"steering server on port {server.port} "
          f"({scene.mass_count} masses, {scene.spring_count} springs, "
          f"snapshot rate {rate:g}/s, decimation {decimate})")
    server.run_forever()
