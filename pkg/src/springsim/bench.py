"""Throughput benchmarks on synthetic cubic lattice blocks.

The workload is a solid voxel block with the standard 28-springs-per-cell
connectivity: reproducible, degree-bounded, and scalable to any requested
spring count by picking the nearest cube edge.  Throughput is reported as
spring evaluations per second (springs x steps / wall time).
"""

from __future__ import annotations

import os
import platform
import time
from dataclasses import dataclass

from .engine import Engine, INTEGRATORS, PARALLEL, VERLET
from .lattice import LatticeSpec, build_voxel_lattice
from .mesh import box_mesh
from .model import Scene

MIN_STEPS = 100
WARMUP_STEPS = 10
DEFAULT_PROFILE_COUNTS = (10_000, 100_000, 1_000_000)

_PITCH = 0.1


def device_description() -> str:
    cpu = platform.processor() or platform.machine() or "unknown cpu"
    return f"{cpu}, {os.cpu_count()} logical cpus, {platform.system()} {platform.release()}"


@dataclass(frozen=True)
class BenchReport:
    """One timed run: what was measured, on what, and how fast it went."""

    device: str
    spring_count: int
    mass_count: int
    steps: int
    wall_time: float
    throughput: float
    threads: int
    integrator: str
    mode: str

    def __post_init__(self):
        if self.steps < MIN_STEPS:
            raise ValueError(f"steps must be >= {MIN_STEPS}, got {self.steps}")
        if self.throughput <= 0.0:
            raise ValueError("throughput must be positive")

    def summary(self) -> str:
        return (f"{self.spring_count:>9} springs  {self.integrator:>6}  "
                f"{self.mode:>12}  {self.threads:>2} thread(s)  "
                f"{self.steps:>5} steps  {self.wall_time:8.3f} s  "
                f"{self.throughput:12.3e} springs/s")


def block_springs(cells: int) -> int:
    """Spring count of a solid voxel block with ``cells`` cells per edge.

    Interior nodes reach all 26 neighbours, faces fewer; summing the 28
    in-cell pairs over the block and removing shared duplicates gives
    ``13 n^3 + 12 n^2 + 3 n``.
    """
    if cells < 1:
        raise ValueError("cells must be >= 1")
    return 13 * cells**3 + 12 * cells**2 + 3 * cells


def block_cells(spring_count: int) -> int:
    """Cube edge (in cells) whose block comes closest to ``spring_count``."""
    if spring_count < 1:
        raise ValueError("spring_count must be >= 1")
    n = max(1, round((spring_count / 13) ** (1 / 3)))
    best = min((n - 1, n, n + 1, n + 2),
               key=lambda c: abs(block_springs(c) - spring_count) if c >= 1
               else float("inf"))
    return best


def block_scene(cells: int) -> Scene:
    """Free-floating solid block, gravity off: a pure force-loop workload."""
    side = cells * _PITCH
    mesh = box_mesh((0.0, 0.0, 0.0), (side, side, side))
    scene = build_voxel_lattice(mesh, LatticeSpec(dim=_PITCH))
    scene.gravity = (0.0, 0.0, 0.0)
    return scene


def bench_scene(scene: Scene, steps: int = MIN_STEPS,
                integrator: str = VERLET, mode: str = PARALLEL,
                threads: int | None = None,
                warmup: int = WARMUP_STEPS) -> BenchReport:
    """Time ``steps`` engine steps on an already-built scene."""
    if steps < MIN_STEPS:
        raise ValueError(f"steps must be >= {MIN_STEPS} for a stable "
                         f"measurement, got {steps}")
    engine = Engine(scene, integrator=integrator, mode=mode, threads=threads)
    engine.step(warmup)
    started = time.perf_counter()
    engine.step(steps)
    wall = max(time.perf_counter() - started, 1e-9)
    return BenchReport(
        device=device_description(),
        spring_count=scene.spring_count,
        mass_count=scene.mass_count,
        steps=steps,
        wall_time=wall,
        throughput=scene.spring_count * steps / wall,
        threads=engine.threads,
        integrator=integrator,
        mode=mode,
    )


def run_bench(spring_count: int, steps: int = MIN_STEPS,
              integrator: str = VERLET, mode: str = PARALLEL,
              threads: int | None = None,
              warmup: int = WARMUP_STEPS) -> BenchReport:
    """Time ``steps`` engine steps on a block of ≈ ``spring_count`` springs."""
    if steps < MIN_STEPS:
        raise ValueError(f"steps must be >= {MIN_STEPS} for a stable "
                         f"measurement, got {steps}")
    cells = block_cells(spring_count)
    try:
        scene = block_scene(cells)
    except MemoryError as exc:
        raise RuntimeError(
            f"out of memory building the {block_springs(cells)}-spring "
            f"bench block ({cells}^3 cells)") from exc
    return bench_scene(scene, steps=steps, integrator=integrator, mode=mode,
                       threads=threads, warmup=warmup)


def profile(spring_counts=DEFAULT_PROFILE_COUNTS, integrators=INTEGRATORS,
            steps: int = MIN_STEPS, mode: str = PARALLEL,
            threads: int | None = None, progress=None) -> list[BenchReport]:
    """Bench every (spring count, integrator) pair; the Fig-9-style grid.

    Each block is built once and shared across integrators — at 10^6 springs
    the build costs more than the measurement.
    """
    reports = []
    for count in spring_counts:
        cells = block_cells(count)
        try:
            scene = block_scene(cells)
        except MemoryError as exc:
            raise RuntimeError(
                f"out of memory building the {block_springs(cells)}-spring "
                f"bench block ({cells}^3 cells)") from exc
        for integrator in integrators:
            report = bench_scene(scene, steps=steps, integrator=integrator,
                                 mode=mode, threads=threads)
            reports.append(report)
            if progress is not None:
                progress(report)
    return reports


def profile_table(reports) -> str:
    lines = [f"device: {reports[0].device}"] if reports else []
    lines += [r.summary() for r in reports]
    return "\n".join(lines)
