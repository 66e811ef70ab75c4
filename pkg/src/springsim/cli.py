"""Command-line front end: generate, simulate, validate, natfreq, bench, serve.

Exit codes separate the caller's mistakes from the physics': 0 success,
1 usage, 2 validation or tolerance failure, 3 divergence, 4 I/O.  The
default thread count can be set once via the ``SPRINGSIM_THREADS``
environment variable instead of repeating ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from .analysis import (HEIGHT_SWEEP, LENGTH_SWEEP, WIDTH_SWEEP,
                       assemble_modal_system, natural_frequencies,
                       run_beam_sweep, run_energy_experiment, sweep_summary,
                       write_sweep_report, zero_cross_frequency)
from .bench import MIN_STEPS, profile, profile_table, run_bench
from .engine import (DivergenceError, EXEC_MODES, INTEGRATORS, PARALLEL,
                     RunResult, SERIAL, VERLET, simulate)
from .lattice import BEST_CANDIDATE, LatticeSpec, VOXEL, build_lattice
from .mesh import load_mesh
from .model import Material, Scene
from .sceneio import SceneFormatError, load_scene, save_scene
from .service import serve
from .traces import TraceSeries

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TOLERANCE = 2
EXIT_DIVERGED = 3
EXIT_IO = 4

THREADS_ENV = "SPRINGSIM_THREADS"

SWEEPS = {"length": LENGTH_SWEEP, "height": HEIGHT_SWEEP, "width": WIDTH_SWEEP}

#: Anchored oscillator used by `validate natfreq`: sqrt(k/m)/2pi = 50.33 Hz.
_NATFREQ_K = 1.0e4
_NATFREQ_M = 0.1


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad arguments; our contract reserves 2 for
    tolerance failures, so usage errors are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if value < 0.0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _trace_ids(text: str):
    if text == "all":
        return "all"
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected 'all' or comma-separated mass ids, got {text!r}")


def _env_threads() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        count = int(raw)
    except ValueError:
        raise _UsageError(f"{THREADS_ENV} must be an integer, "
                          f"got {raw!r}") from None
    return count if count > 0 else None


def _add_engine_flags(parser: _Parser) -> None:
    parser.add_argument("--integrator", choices=sorted(INTEGRATORS),
                        default=VERLET)
    parser.add_argument("--exec", dest="mode", choices=sorted(EXEC_MODES),
                        default=SERIAL)
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or "
                             f"one per cpu)")


def _resolved_threads(args) -> int | None:
    return args.threads if args.threads is not None else _env_threads()


def _load_scene_file(path: str, dt: float | None) -> Scene:
    scene = load_scene(path)
    if dt is not None:
        scene.dt = dt
    return scene


# ---------------------------------------------------------------- subcommands

#: CLI mode words -> lattice builder modes ("random" is best-candidate
#: sampling under the hood).
_LATTICE_MODES = {"voxel": VOXEL, "random": BEST_CANDIDATE}


def _cmd_generate(args) -> int:
    if args.mode == "voxel" and args.dim is None:
        raise _UsageError("--mode voxel requires --dim")
    if args.mode == "random" and args.cutoff is None:
        raise _UsageError("--mode random requires --cutoff")
    mesh = load_mesh(args.mesh)
    spec = LatticeSpec(mode=_LATTICE_MODES[args.mode], dim=args.dim,
                       cutoff=args.cutoff, seed=args.seed)
    overrides = {}
    if args.stiffness is not None:
        overrides["k0"] = args.stiffness
    if args.node_mass is not None:
        overrides["mass_per_node"] = args.node_mass
    material = Material(**overrides) if overrides else None
    scene = build_lattice(mesh, spec, material)
    if args.dt is not None:
        scene.dt = args.dt
    save_scene(scene, args.out)
    lengths = [s.l0 for s in scene.springs]
    print(f"{len(scene.masses)} masses, {len(scene.springs)} springs, "
          f"spring length min {min(lengths):g} max {max(lengths):g}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    scene = _load_scene_file(args.scene, args.dt)
    traces = args.trace
    if traces == "all":
        traces = tuple(range(len(scene.masses)))
    for mass_id in traces:
        if not 0 <= mass_id < len(scene.masses):
            raise _UsageError(f"--trace id {mass_id} out of range "
                              f"(scene has {len(scene.masses)} masses)")
    run = simulate(scene, args.duration, traces=traces,
                   integrator=args.integrator, mode=args.mode,
                   threads=_resolved_threads(args))
    if run.times.size == 0:
        # A zero-duration request still documents the starting state; the
        # lagged-velocity integrator has no sampled step to pair, so the row
        # is synthesized from the untouched engine state.
        engine = run.engine
        run = RunResult(
            times=np.array([engine.t]),
            positions={i: engine.x[i][None, :] for i in traces},
            energies=np.array([engine.energies()]),
            engine=engine)
    run.write_csv(args.out)
    print(f"{run.times.size} rows -> {args.out}")
    return EXIT_OK


def _oscillator_scene(stretch: float = 0.0) -> Scene:
    """Single anchored spring, its free end ``stretch`` m past rest length.

    The modal route linearizes about the rest configuration (stretch 0),
    where the transverse directions are mechanisms and the one elastic mode
    is the axial sqrt(k/m)/2pi.  Any nonzero stretch would instead report
    the string-tension swing modes first.
    """
    scene = Scene(gravity=(0.0, 0.0, 0.0), dt=1e-5)
    top = scene.add_mass((0.0, 0.0, 0.0), fixed=True)
    scene.add_mass((1.0 + stretch, 0.0, 0.0), m=_NATFREQ_M)
    scene.add_spring(top, 1, k=_NATFREQ_K, l0=1.0)
    return scene


def _validate_beam(args) -> int:
    design = SWEEPS[args.vary]
    result = run_beam_sweep(design)
    print(sweep_summary(result))
    print(f"sweep wall time {result.wall_time:.1f} s")
    if args.out:
        write_sweep_report(result, args.out)
        print(f"report -> {args.out}")
    if not result.within_tolerance:
        for idx, err in enumerate(result.relative_errors):
            if abs(err) > design.tolerance:
                print(f"FAIL {design.parameter} factor "
                      f"{design.factors[idx]:g}: measured ratio "
                      f"{result.measured_ratios[idx]:.4f} vs law "
                      f"{result.theory_ratios[idx]:.4f} "
                      f"({err:+.1%} > {design.tolerance:.0%})",
                      file=sys.stderr)
        return EXIT_TOLERANCE
    print(f"PASS max error {result.max_relative_error:.1%} "
          f"within {design.tolerance:.0%}")
    return EXIT_OK


def _validate_energy(args) -> int:
    audit = run_energy_experiment()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "elastic", "gravitational", "kinetic",
                             "total"])
            for row in zip(audit.times, audit.elastic, audit.gravitational,
                           audit.kinetic, audit.total):
                writer.writerow([f"{v:.17g}" for v in row])
        print(f"report -> {args.out}")
    print(f"total-energy drift {audit.drift:.3%} over "
          f"{audit.times[-1] - audit.times[0]:.1f} s (bound 1%)")
    print(f"kinetic/potential correlation {audit.correlation:+.3f} "
          f"(bound < 0)")
    failed = False
    if audit.drift >= 0.01:
        print(f"FAIL drift {audit.drift:.3%} >= 1%", file=sys.stderr)
        failed = True
    if audit.correlation >= 0.0:
        print(f"FAIL correlation {audit.correlation:+.3f} >= 0",
              file=sys.stderr)
        failed = True
    if failed:
        return EXIT_TOLERANCE
    print("PASS")
    return EXIT_OK


def _validate_natfreq(args) -> int:
    analytic = math.sqrt(_NATFREQ_K / _NATFREQ_M) / (2.0 * math.pi)
    modal = assemble_modal_system(_oscillator_scene())
    predicted = float(natural_frequencies(modal, count=1)[0])
    run = simulate(_oscillator_scene(stretch=0.02), 10.0 / analytic,
                   traces=(1,))
    trace = TraceSeries(run.times, run.positions[1])
    measured = zero_cross_frequency(trace.component(0), 1.0)
    error = abs(predicted - measured) / predicted
    print(f"{'route':>20} {'frequency':>12}")
    print(f"{'analytic':>20} {analytic:12.4f}")
    print(f"{'predicted (modal)':>20} {predicted:12.4f}")
    print(f"{'measured (crossing)':>20} {measured:12.4f}")
    print(f"relative error {error:.3%} (bound 2%)")
    if error >= 0.02:
        print(f"FAIL predicted {predicted:.4f} Hz vs measured "
              f"{measured:.4f} Hz: error {error:.3%} >= 2%", file=sys.stderr)
        return EXIT_TOLERANCE
    print("PASS")
    return EXIT_OK


def _cmd_validate(args) -> int:
    return {"beam": _validate_beam, "energy": _validate_energy,
            "natfreq": _validate_natfreq}[args.suite](args)


def _cmd_natfreq(args) -> int:
    scene = _load_scene_file(args.scene, None)
    freqs = natural_frequencies(assemble_modal_system(scene),
                                count=args.modes)
    for idx, freq in enumerate(freqs, start=1):
        print(f"mode {idx}: {freq:.6g} Hz")
    return EXIT_OK


def _cmd_bench(args) -> int:
    threads = _resolved_threads(args)
    if args.profile:
        reports = profile(steps=args.steps, mode=args.mode, threads=threads,
                          progress=lambda r: print(r.summary(),
                                                   file=sys.stderr))
        print(profile_table(reports))
        return EXIT_OK
    report = run_bench(args.springs, steps=args.steps,
                       integrator=args.integrator, mode=args.mode,
                       threads=threads)
    print(report.device)
    print(report.summary())
    return EXIT_OK


def _cmd_serve(args) -> int:
    scene = _load_scene_file(args.scene, args.dt)
    try:
        serve(scene, port=args.port, rate=args.rate, decimate=args.decimate,
              integrator=args.integrator, mode=args.mode,
              threads=_resolved_threads(args))
    except KeyboardInterrupt:
        print("interrupted")
    return EXIT_OK


# -------------------------------------------------------------------- wiring

class _UsageError(Exception):
    """Raised by handlers for argument problems argparse cannot see."""


def build_parser() -> _Parser:
    parser = _Parser(prog="springsim",
                     description="Mass-spring lattice simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", parents=[], prog="springsim generate",
                         help="build a lattice scene from a surface mesh")
    gen.add_argument("--mesh", required=True)
    gen.add_argument("--mode", choices=sorted(_LATTICE_MODES),
                     default="voxel")
    gen.add_argument("--dim", type=_positive_float, default=None,
                     help="voxel cell size (m)")
    gen.add_argument("--cutoff", type=_positive_float, default=None,
                     help="random-mode minimum point spacing (m)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--stiffness", type=_positive_float, default=None,
                     help="reference spring constant k0 (N/m)")
    gen.add_argument("--node-mass", type=_positive_float, default=None,
                     help="mass per lattice node (kg)")
    gen.add_argument("--dt", type=_positive_float, default=None)
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=_cmd_generate)

    sim = sub.add_parser("simulate", prog="springsim simulate",
                         help="run a scene and write the trace CSV")
    sim.add_argument("--scene", required=True)
    sim.add_argument("--duration", type=_nonneg_float, required=True)
    sim.add_argument("--dt", type=_positive_float, default=None,
                     help="override the scene's time step")
    sim.add_argument("--trace", type=_trace_ids, default="all",
                     help="'all' or comma-separated mass ids")
    sim.add_argument("--out", required=True)
    _add_engine_flags(sim)
    sim.set_defaults(handler=_cmd_simulate)

    val = sub.add_parser("validate", prog="springsim validate",
                         help="run a physics check suite")
    val.add_argument("suite", choices=["beam", "energy", "natfreq"])
    val.add_argument("--vary", choices=sorted(SWEEPS), default="length",
                     help="beam suite: which dimension to sweep")
    val.add_argument("--out", default=None, help="write the report CSV here")
    val.set_defaults(handler=_cmd_validate)

    nat = sub.add_parser("natfreq", prog="springsim natfreq",
                         help="modal natural frequencies of a scene")
    nat.add_argument("--scene", required=True)
    nat.add_argument("--modes", type=_positive_int, default=4)
    nat.set_defaults(handler=_cmd_natfreq)

    ben = sub.add_parser("bench", prog="springsim bench",
                         help="time a synthetic lattice block")
    ben.add_argument("--springs", type=_positive_int, default=1_000_000)
    ben.add_argument("--steps", type=_positive_int, default=MIN_STEPS)
    ben.add_argument("--profile", action="store_true",
                     help="sweep spring counts and integrators")
    _add_engine_flags(ben)
    ben.set_defaults(mode=PARALLEL, handler=_cmd_bench)

    srv = sub.add_parser("serve", prog="springsim serve",
                         help="expose a live simulation for steering")
    srv.add_argument("--scene", required=True)
    srv.add_argument("--port", type=int, default=7864)
    srv.add_argument("--rate", type=_positive_float, default=20.0,
                     help="snapshot rate (Hz)")
    srv.add_argument("--decimate", type=_positive_int, default=1,
                     help="send every Dth mass by id")
    srv.add_argument("--dt", type=_positive_float, default=None)
    _add_engine_flags(srv)
    srv.set_defaults(handler=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "bench" and args.steps < MIN_STEPS:
        print(f"springsim bench: error: --steps must be >= {MIN_STEPS} "
              f"for a stable measurement, got {args.steps}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"springsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"springsim: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except SceneFormatError as exc:
        print(f"springsim: invalid scene: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (ValueError, KeyError) as exc:
        print(f"springsim: error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except MemoryError:
        print("springsim: out of memory", file=sys.stderr)
        return EXIT_IO
    except RuntimeError as exc:
        code = EXIT_DIVERGED if "diverg" in str(exc).lower() else EXIT_IO
        print(f"springsim: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"springsim: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    """Console-script hook: turn main()'s return value into the exit code."""
    sys.exit(main())


if __name__ == "__main__":
    entry()
