"""Mass-spring lattice simulation with parallel force accumulation."""

from .analysis import (
    BeamRunConfig,
    BeamRunResult,
    BeamSpec,
    EnergyRunResult,
    ModalSystem,
    SweepDesign,
    SweepResult,
    assemble_modal_system,
    beam_lattice,
    energies,
    euler_bernoulli_frequency,
    fft_dominant_frequency,
    modal_modes,
    natural_frequencies,
    run_beam_experiment,
    run_beam_sweep,
    run_energy_experiment,
    static_displacements,
    sweep_summary,
    write_sweep_report,
    zero_cross_frequency,
)
from .bench import (
    BenchReport,
    bench_scene,
    block_cells,
    block_scene,
    block_springs,
    profile,
    profile_table,
    run_bench,
)
from .engine import (
    EULER,
    EXEC_MODES,
    INTEGRATORS,
    PARALLEL,
    PARALLEL_DET,
    RK4,
    SERIAL,
    VERLET,
    DivergenceError,
    Engine,
    EngineState,
    RunResult,
    simulate,
)
from .lattice import (
    LatticeSpec,
    build_lattice,
    build_random_lattice,
    build_voxel_lattice,
)
from .mesh import TriangleMesh, box_mesh, load_mesh, point_inside, save_mesh, unit_cube
from .model import (
    ActuationGroup,
    ContactPlane,
    Mass,
    Material,
    Scene,
    Spring,
    Violation,
    actuated_rest_length,
    contact_floor,
    validate_scene,
)
from .sceneio import (
    SCHEMA_VERSION,
    SceneFormatError,
    load_scene,
    parse_scene,
    render_scene,
    save_scene,
)
from .service import PROTOCOL_VERSION, ProtocolError, SteerServer, serve

__version__ = "0.1.0"

__all__ = [
    "ActuationGroup",
    "BeamRunConfig",
    "BeamRunResult",
    "BeamSpec",
    "BenchReport",
    "ContactPlane",
    "DivergenceError",
    "EULER",
    "EXEC_MODES",
    "EnergyRunResult",
    "Engine",
    "EngineState",
    "INTEGRATORS",
    "LatticeSpec",
    "Mass",
    "Material",
    "ModalSystem",
    "PARALLEL",
    "PARALLEL_DET",
    "PROTOCOL_VERSION",
    "ProtocolError",
    "RK4",
    "RunResult",
    "SCHEMA_VERSION",
    "SERIAL",
    "Scene",
    "SceneFormatError",
    "Spring",
    "SteerServer",
    "SweepDesign",
    "SweepResult",
    "TriangleMesh",
    "VERLET",
    "Violation",
    "actuated_rest_length",
    "assemble_modal_system",
    "beam_lattice",
    "bench_scene",
    "block_cells",
    "block_scene",
    "block_springs",
    "box_mesh",
    "build_lattice",
    "build_random_lattice",
    "build_voxel_lattice",
    "contact_floor",
    "energies",
    "euler_bernoulli_frequency",
    "fft_dominant_frequency",
    "load_mesh",
    "load_scene",
    "modal_modes",
    "natural_frequencies",
    "parse_scene",
    "point_inside",
    "profile",
    "profile_table",
    "render_scene",
    "run_beam_experiment",
    "run_beam_sweep",
    "run_bench",
    "run_energy_experiment",
    "save_mesh",
    "save_scene",
    "serve",
    "simulate",
    "static_displacements",
    "sweep_summary",
    "unit_cube",
    "validate_scene",
    "write_sweep_report",
    "zero_cross_frequency",
    "__version__",
]
