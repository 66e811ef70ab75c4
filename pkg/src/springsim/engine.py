"""Time integration: forces, three explicit integrators, three execution modes.

Execution modes differ only in how spring forces are accumulated:

* ``serial`` — springs summed one by one in id order (the oracle).
* ``parallel`` — the two-phase slot-reservation schedule; each mass's slots
  are summed in arrival order, so results match serial to rounding (1e-9
  scale), not bitwise.
* ``parallel-det`` — same schedule, but slots are sorted by spring id before
  summation, replaying the serial addition order: bitwise-identical results.

Everything after accumulation (gravity, external and contact forces, the
integrator update, damping) is identical elementwise arithmetic across modes.
"""

from __future__ import annotations

import math
import queue
from dataclasses import dataclass, field

import numba
import numpy as np

from . import _kernels
from .model import CONSTANT_EXPANSION, Scene
from .traces import TraceSeries

SERIAL = "serial"
PARALLEL = "parallel"
PARALLEL_DET = "parallel-det"
EXEC_MODES = (SERIAL, PARALLEL, PARALLEL_DET)

EULER = "euler"
VERLET = "verlet"
RK4 = "rk4"
INTEGRATORS = (EULER, VERLET, RK4)

# Slot head-room beyond each mass's spring degree, reserved for constraint
# forces should they ever be routed through the slab.
EXTRA_SLOTS = 4


class DivergenceError(RuntimeError):
    """A position or velocity went non-finite; the run is halted."""

    def __init__(self, mass_id: int, step: int):
        self.mass_id = mass_id
        self.step = step
        super().__init__(
            f"simulation diverged at step {step}: mass {mass_id} has a "
            f"non-finite position or velocity (try a smaller dt)")


def spring_force(x_i, x_j, k: float, l0: float) -> np.ndarray:
    """Force on mass i from one spring; the force on j is the exact negation.

    Tension (stretched past ``l0``) pulls i toward j.  Near-coincident
    endpoints give zero force rather than a blow-up.
    """
    l = np.asarray(x_j, dtype=np.float64) - np.asarray(x_i, dtype=np.float64)
    length = float(np.linalg.norm(l))
    if length < _kernels.DEGENERATE_LENGTH:
        return np.zeros(3)
    return (k * (length - l0) / length) * l


def contact_force(x, v, m: float, plane, dt: float) -> np.ndarray:
    """Penalty + Coulomb friction force a plane exerts on one mass.

    Zero outside the plane.  Friction opposes the tangential velocity and is
    clamped to ``|v_t|·m/dt`` so a single step can at most cancel the
    tangential motion, never reverse it.
    """
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    normal = np.asarray(plane.normal, dtype=np.float64)
    depth = plane.offset - x @ normal
    if depth <= 0.0:
        return np.zeros(3)
    f_n = plane.penalty * depth
    force = f_n * normal
    if plane.friction > 0.0:
        v_t = v - (v @ normal) * normal
        speed = float(np.linalg.norm(v_t))
        if speed > 1e-15:
            mag = min(plane.friction * f_n, speed * m / dt)
            force = force - (mag / speed) * v_t
    return force


@dataclass
class ForceSlab:
    """Per-mass slot arrays for the parallel force schedule.

    ``capacity[i]`` = spring degree of mass i + ``EXTRA_SLOTS``; the row
    stride is the maximum capacity.  ``counter`` holds each mass's atomic
    insertion cursor and must read zero between steps.
    """

    slots: np.ndarray        # (n, stride, 3)
    slot_spring: np.ndarray  # (n, stride) int64
    counter: np.ndarray      # (n,) int64
    capacity: np.ndarray     # (n,) int64

    @classmethod
    def for_degrees(cls, degrees) -> "ForceSlab":
        capacity = np.asarray(degrees, dtype=np.int64) + EXTRA_SLOTS
        n = len(capacity)
        stride = int(capacity.max()) if n else EXTRA_SLOTS
        return cls(
            slots=np.zeros((n, stride, 3)),
            slot_spring=np.zeros((n, stride), dtype=np.int64),
            counter=np.zeros(n, dtype=np.int64),
            capacity=capacity,
        )

    def fill(self, x, si, sj, k, l0) -> int:
        """Phase 1; returns the degenerate-spring count."""
        overflow = np.zeros(1, dtype=np.int64)
        degenerate = _kernels.fill_slots(x, si, sj, k, l0, self.slots,
                                         self.slot_spring, self.counter,
                                         self.capacity, overflow)
        if overflow[0]:
            self.counter[:] = 0
            raise RuntimeError("force slab slot overflow: degree bookkeeping is wrong")
        return int(degenerate)

    def sum_into(self, acc: np.ndarray, deterministic: bool) -> None:
        """Phase 2; also resets the counters."""
        _kernels.sum_slots(self.slots, self.slot_spring, self.counter,
                           deterministic, acc)


@dataclass
class EngineState:
    """Snapshot of an engine between steps."""

    positions: np.ndarray
    velocities: np.ndarray
    prev_positions: np.ndarray | None
    t: float
    n: int
    integrator: str
    mode: str


def energy_breakdown(x, v, m, si, sj, k, l0_eff, gravity, datum: float):
    """(elastic, gravitational, kinetic) energy of a raw state.

    Gravitational height is measured opposite the gravity direction from
    ``datum``; zero gravity means zero GPE by convention.  Overflow warnings
    are suppressed: a blowing-up state reads as inf here and is reported
    properly by the stepper's divergence check.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        if si.size:
            d = x[sj] - x[si]
            lengths = np.linalg.norm(d, axis=1)
            epe = float(0.5 * np.sum(k * (lengths - l0_eff) ** 2))
        else:
            epe = 0.0
        g_mag = float(np.linalg.norm(gravity))
        if g_mag > 0.0:
            up = -np.asarray(gravity, dtype=np.float64) / g_mag
            gpe = float(np.sum(m * g_mag * (x @ up - datum)))
        else:
            gpe = 0.0
        ke = float(0.5 * np.sum(m * np.einsum("ij,ij->i", v, v)))
    return epe, gpe, ke


class Engine:
    """Steps a scene through time.

    Construction freezes the scene into flat arrays; afterwards the scene
    object is not consulted again, and runtime mutation happens only through
    the engine's own setters or its thread-safe command queue (drained
    between steps).  An engine must not be stepped from two threads at once.
    """

    def __init__(self, scene: Scene, integrator: str = VERLET, mode: str = SERIAL,
                 threads: int | None = None):
        if integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {integrator!r}")
        if mode not in EXEC_MODES:
            raise ValueError(f"unknown execution mode {mode!r}")
        if scene.mass_count == 0:
            raise ValueError("scene has no masses")
        self.integrator = integrator
        self.mode = mode
        self.dt = float(scene.dt)
        self.damping = float(scene.damping)
        self.gravity = np.asarray(scene.gravity, dtype=np.float64)

        self.x = np.array([mass.x for mass in scene.masses], dtype=np.float64)
        self.v = np.array([mass.v for mass in scene.masses], dtype=np.float64)
        self.m = np.array([mass.m for mass in scene.masses], dtype=np.float64)
        self.f_ext = np.array([mass.f_ext for mass in scene.masses], dtype=np.float64)
        fixed = np.array([mass.fixed for mass in scene.masses], dtype=bool)
        self._fixed_idx = np.nonzero(fixed)[0]
        self.x_prev: np.ndarray | None = None

        self._si = np.array([s.i for s in scene.springs], dtype=np.int64)
        self._sj = np.array([s.j for s in scene.springs], dtype=np.int64)
        self._sk = np.array([s.k for s in scene.springs], dtype=np.float64)
        self._l0 = np.array([s.l0 for s in scene.springs], dtype=np.float64)
        self._l0_eff = self._l0.copy()

        self._groups: dict[str, dict] = {}
        for label, g in scene.groups.items():
            idx = np.array([s.id for s in scene.springs if s.group == label],
                           dtype=np.int64)
            self._groups[label] = {
                "indices": idx, "mode": g.mode, "amplitude": float(g.amplitude),
                "frequency": float(g.frequency), "phase": float(g.phase),
            }

        self._planes = [(np.asarray(p.normal, dtype=np.float64), float(p.offset),
                         float(p.penalty), float(p.friction)) for p in scene.planes]

        self.t = 0.0
        self.n = 0
        self.degenerate_springs = 0
        self.paused = False
        self.stopped = False
        self._commands: queue.Queue = queue.Queue()
        self.command_errors: list[str] = []

        degrees = np.zeros(scene.mass_count, dtype=np.int64)
        np.add.at(degrees, self._si, 1)
        np.add.at(degrees, self._sj, 1)
        self._slab = ForceSlab.for_degrees(degrees) if mode != SERIAL else None

        self.threads = 1
        if mode != SERIAL:
            available = numba.config.NUMBA_NUM_THREADS
            self.threads = max(1, min(threads or available, available))
            numba.set_num_threads(self.threads)

        g_mag = float(np.linalg.norm(self.gravity))
        self.gpe_datum = float((self.x @ (-self.gravity / g_mag)).min()) if g_mag else 0.0

        steppers = {EULER: self._step_euler, VERLET: self._step_verlet,
                    RK4: self._step_rk4}
        self._advance = steppers[integrator]

    # ------------------------------------------------------------- forces

    def _rest_lengths(self, t: float) -> np.ndarray:
        for g in self._groups.values():
            idx = g["indices"]
            if g["mode"] == CONSTANT_EXPANSION:
                scale = 1.0 + g["amplitude"]
            else:
                scale = 1.0 + g["amplitude"] * math.sin(
                    2.0 * math.pi * g["frequency"] * t + g["phase"])
            self._l0_eff[idx] = self._l0[idx] * scale
        return self._l0_eff

    def forces(self, x: np.ndarray, v: np.ndarray, t: float) -> np.ndarray:
        """Total force on every mass at an arbitrary trial state."""
        l0_eff = self._rest_lengths(t)
        acc = np.zeros_like(x)
        if self.mode == SERIAL:
            degenerate = _kernels.accumulate_springs_serial(
                x, self._si, self._sj, self._sk, l0_eff, acc)
        else:
            degenerate = self._slab.fill(x, self._si, self._sj, self._sk, l0_eff)
            self._slab.sum_into(acc, self.mode == PARALLEL_DET)
        self.degenerate_springs += degenerate

        acc += self.m[:, None] * self.gravity
        acc += self.f_ext
        for normal, offset, penalty, friction in self._planes:
            depth = offset - x @ normal
            idx = np.nonzero(depth > 0.0)[0]
            if idx.size == 0:
                continue
            f_n = penalty * depth[idx]
            acc[idx] += f_n[:, None] * normal
            if friction > 0.0:
                v_t = v[idx] - (v[idx] @ normal)[:, None] * normal
                speed = np.linalg.norm(v_t, axis=1)
                moving = speed > 1e-15
                sub = idx[moving]
                mag = np.minimum(friction * f_n[moving], speed[moving] * self.m[sub] / self.dt)
                acc[sub] -= (mag / speed[moving])[:, None] * v_t[moving]
        return acc

    def total_force(self, mass_id: int) -> np.ndarray:
        """Current total force on one mass (gravity + external + springs + contact)."""
        return self.forces(self.x, self.v, self.t)[mass_id]

    # --------------------------------------------------------- integrators

    def _restore_fixed(self, x_new, v_new):
        fi = self._fixed_idx
        if fi.size:
            x_new[fi] = self.x[fi]
            v_new[fi] = self.v[fi]

    def _step_euler(self):
        f = self.forces(self.x, self.v, self.t)
        x_new = self.x + self.dt * self.v
        v_new = self.v + (self.dt / self.m)[:, None] * f
        if self.damping:
            v_new *= 1.0 - self.damping
        self._restore_fixed(x_new, v_new)
        self.x, self.v = x_new, v_new

    def _step_verlet(self):
        f = self.forces(self.x, self.v, self.t)
        accel_term = (self.dt * self.dt / self.m)[:, None] * f
        if self.x_prev is None:
            # bootstrap from the initial velocity
            x_new = self.x + self.dt * self.v + 0.5 * accel_term
            v_new = self.v
        else:
            if self.damping:
                x_new = self.x + (1.0 - self.damping) * (self.x - self.x_prev) + accel_term
            else:
                x_new = 2.0 * self.x - self.x_prev + accel_term
            # central difference: the velocity one step behind the positions
            v_new = (x_new - self.x_prev) / (2.0 * self.dt)
        self._restore_fixed(x_new, v_new)
        self.x_prev = self.x
        self.x, self.v = x_new, v_new

    def _step_rk4(self):
        dt = self.dt
        m = self.m[:, None]
        x0, v0, t = self.x, self.v, self.t

        a1 = self.forces(x0, v0, t) / m
        x2 = x0 + (0.5 * dt) * v0
        v2 = v0 + (0.5 * dt) * a1
        self._restore_fixed(x2, v2)
        a2 = self.forces(x2, v2, t + 0.5 * dt) / m
        x3 = x0 + (0.5 * dt) * v2
        v3 = v0 + (0.5 * dt) * a2
        self._restore_fixed(x3, v3)
        a3 = self.forces(x3, v3, t + 0.5 * dt) / m
        x4 = x0 + dt * v3
        v4 = v0 + dt * a3
        self._restore_fixed(x4, v4)
        a4 = self.forces(x4, v4, t + dt) / m

        x_new = x0 + (dt / 6.0) * (v0 + 2.0 * v2 + 2.0 * v3 + v4)
        v_new = v0 + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        if self.damping:
            v_new *= 1.0 - self.damping
        self._restore_fixed(x_new, v_new)
        self.x, self.v = x_new, v_new

    # ------------------------------------------------------------ stepping

    @property
    def mass_count(self) -> int:
        return len(self.x)

    @property
    def spring_count(self) -> int:
        return len(self._sk)

    def step(self, count: int = 1) -> None:
        """Advance ``count`` steps, draining queued commands between steps."""
        for _ in range(count):
            self.drain_commands()
            self._advance()
            self.n += 1
            self.t = self.n * self.dt
            self._check_finite()

    def _check_finite(self):
        ok_x = np.isfinite(self.x).all(axis=1)
        ok_v = np.isfinite(self.v).all(axis=1)
        if ok_x.all() and ok_v.all():
            return
        bad = ~(ok_x & ok_v)
        raise DivergenceError(int(np.argmax(bad)), self.n)

    @property
    def state(self) -> EngineState:
        return EngineState(
            positions=self.x.copy(), velocities=self.v.copy(),
            prev_positions=None if self.x_prev is None else self.x_prev.copy(),
            t=self.t, n=self.n, integrator=self.integrator, mode=self.mode)

    def energies(self, x=None, v=None, t=None):
        """(epe, gpe, ke, total) at the current (or a supplied) state."""
        x = self.x if x is None else x
        v = self.v if v is None else v
        t = self.t if t is None else t
        epe, gpe, ke = energy_breakdown(x, v, self.m, self._si, self._sj,
                                        self._sk, self._rest_lengths(t),
                                        self.gravity, self.gpe_datum)
        return epe, gpe, ke, epe + gpe + ke

    # ------------------------------------------------------------ commands

    def set_external_force(self, mass_id: int, f) -> None:
        self.f_ext[mass_id] = np.asarray(f, dtype=np.float64)

    def set_damping(self, value: float) -> None:
        if not 0.0 <= value < 1.0:
            raise ValueError("damping must be in [0, 1)")
        self.damping = float(value)

    def set_gravity(self, g) -> None:
        self.gravity = np.asarray(g, dtype=np.float64)

    def set_actuation(self, label: str, amplitude=None, frequency=None, phase=None) -> None:
        if label not in self._groups:
            raise ValueError(f"unknown actuation group {label!r}")
        g = self._groups[label]
        if amplitude is not None:
            if not abs(amplitude) < 1.0:
                raise ValueError("|amplitude| must be < 1")
            g["amplitude"] = float(amplitude)
        if frequency is not None:
            g["frequency"] = float(frequency)
        if phase is not None:
            g["phase"] = float(phase)

    def post_command(self, command: dict) -> None:
        """Thread-safe: queue a command for the next step boundary."""
        self._commands.put(dict(command))

    def drain_commands(self, wait: float = 0.0) -> None:
        """Apply queued commands; with ``wait`` > 0, block that long for the
        first command (used while paused, to avoid spinning)."""
        first = True
        while True:
            try:
                if first and wait > 0.0:
                    cmd = self._commands.get(timeout=wait)
                else:
                    cmd = self._commands.get_nowait()
            except queue.Empty:
                return
            first = False
            try:
                self.apply_command(cmd)
            except Exception as exc:  # keep stepping; report through the channel
                self.command_errors.append(f"{cmd.get('op', '?')}: {exc}")

    def apply_command(self, cmd: dict) -> None:
        op = cmd.get("op")
        if op == "pause":
            self.paused = True
        elif op == "resume":
            self.paused = False
        elif op == "stop":
            self.stopped = True
        elif op == "set-damping":
            self.set_damping(float(cmd["value"]))
        elif op == "set-gravity":
            self.set_gravity([float(c) for c in cmd["value"]])
        elif op == "set-external-force":
            self.set_external_force(int(cmd["mass"]), [float(c) for c in cmd["value"]])
        elif op == "set-actuation":
            self.set_actuation(cmd["group"], cmd.get("amplitude"),
                               cmd.get("frequency"), cmd.get("phase"))
        else:
            raise ValueError(f"unknown command op {op!r}")


def total_force(scene: Scene, mass_id: int, t: float = 0.0) -> np.ndarray:
    """Total force on one mass of a scene at rest state, serial evaluation."""
    engine = Engine(scene, integrator=EULER, mode=SERIAL)
    engine.t = t
    return engine.total_force(mass_id)


@dataclass
class RunResult:
    """Sampled output of :func:`simulate`: times, traced positions, energies.

    Energy columns are elastic, gravitational, kinetic, total.  With the
    position-Verlet integrator, samples pair each position with its
    central-difference velocity, so the last sampled step is one behind the
    final engine state.
    """

    times: np.ndarray
    positions: dict[int, np.ndarray]
    energies: np.ndarray
    engine: Engine = field(repr=False)

    def position_series(self, mass_id: int, axis: int | None = None) -> TraceSeries:
        values = self.positions[mass_id]
        if axis is not None:
            values = values[:, axis]
        return TraceSeries(self.times, values)

    def energy_series(self, term: str) -> TraceSeries:
        column = {"epe": 0, "gpe": 1, "ke": 2, "total": 3}[term]
        return TraceSeries(self.times, self.energies[:, column])

    def write_csv(self, path) -> None:
        ids = sorted(self.positions)
        header = ["t"]
        for mass_id in ids:
            header += [f"{mass_id}.x", f"{mass_id}.y", f"{mass_id}.z"]
        header += ["epe", "gpe", "ke", "total"]
        lines = [",".join(header)]
        for row in range(len(self.times)):
            cells = [f"{self.times[row]:.17g}"]
            for mass_id in ids:
                cells += [f"{c:.17g}" for c in self.positions[mass_id][row]]
            cells += [f"{c:.17g}" for c in self.energies[row]]
            lines.append(",".join(cells))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def simulate(scene: Scene, duration: float, traces=(), integrator: str = VERLET,
             mode: str = SERIAL, threads: int | None = None, sample_every: int = 1,
             engine: Engine | None = None) -> RunResult:
    """Run for ``ceil(duration/dt)`` steps, sampling positions and energies.

    Pass a previous result's ``engine`` to continue a run (same sampling
    rules, times stay absolute).  Mid-run commands queued on the engine are
    honored at step boundaries, including pause/resume/stop.
    """
    if engine is None:
        engine = Engine(scene, integrator=integrator, mode=mode, threads=threads)
    dt = engine.dt
    steps = max(0, math.ceil(duration / dt - 1e-9))
    verlet = engine.integrator == VERLET

    times, rows, erows = [], {mass_id: [] for mass_id in traces}, []

    def emit(step_index, x, v):
        t = step_index * dt
        times.append(t)
        for mass_id in rows:
            rows[mass_id].append(x[mass_id].copy())
        epe, gpe, ke, total = engine.energies(x, v, t)
        erows.append((epe, gpe, ke, total))

    if not verlet and engine.n == 0:
        emit(0, engine.x, engine.v)

    for _ in range(steps):
        while engine.paused and not engine.stopped:
            engine.drain_commands(wait=0.02)
        if engine.stopped:
            break
        engine.step()
        if verlet:
            # the step just completed fixes the centered velocity for the
            # PREVIOUS position; sample that pair
            done = engine.n - 1
            if done % sample_every == 0:
                emit(done, engine.x_prev, engine.v)
        elif engine.n % sample_every == 0:
            emit(engine.n, engine.x, engine.v)

    return RunResult(
        times=np.asarray(times),
        positions={mass_id: np.asarray(vals) for mass_id, vals in rows.items()},
        energies=np.asarray(erows).reshape(-1, 4),
        engine=engine)
