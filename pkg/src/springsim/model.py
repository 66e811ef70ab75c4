"""Domain types for mass-spring scenes.

Everything here is a plain value object: masses, Hookean springs, materials,
actuation groups, contact planes, and the assembled :class:`Scene`.  The
simulation engine compiles a Scene into flat arrays; these classes stay
inert and cheap to copy, serialize, and send between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

Vec3 = tuple[float, float, float]

DEFAULT_GRAVITY: Vec3 = (0.0, -9.81, 0.0)
DEFAULT_DT = 1e-4
DEFAULT_SPRING_K0 = 10000.0
DEFAULT_MASS_PER_NODE = 0.1

SINUSOID = "sinusoid"
CONSTANT_EXPANSION = "constant-expansion"
ACTUATION_MODES = (SINUSOID, CONSTANT_EXPANSION)


def _vec3(v) -> Vec3:
    x, y, z = v
    return (float(x), float(y), float(z))


@dataclass
class Mass:
    """A point mass: state plus a persistent external force and anchor flag."""

    id: int
    m: float
    x: Vec3
    v: Vec3 = (0.0, 0.0, 0.0)
    f_ext: Vec3 = (0.0, 0.0, 0.0)
    fixed: bool = False


@dataclass
class Spring:
    """Hookean element between masses ``i`` and ``j``.

    ``k`` is the spring constant, ``l0`` the rest length.  ``group`` names an
    actuation group whose signal modulates the rest length over time; ``None``
    means passive.
    """

    id: int
    i: int
    j: int
    k: float
    l0: float
    group: str | None = None


@dataclass
class Material:
    """Lattice material: stiffness law plus one way of assigning node masses.

    ``k0`` is the spring constant at reference length ``l_ref``; generated
    springs get ``k = k0 * l_ref / l0`` so stiffness scales inversely with
    rest length.  Exactly one of ``density`` (kg/m^3, uniform mass =
    density * lattice volume / node count), ``total_mass`` (kg, spread
    uniformly), or ``mass_per_node`` (kg) must be positive.
    """

    name: str = "default"
    k0: float = DEFAULT_SPRING_K0
    l_ref: float | None = None
    density: float | None = None
    total_mass: float | None = None
    mass_per_node: float | None = DEFAULT_MASS_PER_NODE

    def stiffness(self, l0: float, l_ref: float | None = None) -> float:
        """Spring constant for a spring of rest length ``l0``."""
        ref = self.l_ref if self.l_ref is not None else l_ref
        if ref is None:
            raise ValueError("material has no reference length and none was supplied")
        return self.k0 * ref / l0

    def node_mass(self, node_count: int, volume: float | None = None) -> float:
        """Uniform per-node mass for a lattice of ``node_count`` nodes."""
        if node_count <= 0:
            raise ValueError("node_count must be positive")
        if self.mass_per_node is not None:
            return float(self.mass_per_node)
        if self.total_mass is not None:
            return float(self.total_mass) / node_count
        if self.density is not None:
            if volume is None:
                raise ValueError("density-based material needs a lattice volume")
            return float(self.density) * volume / node_count
        raise ValueError("material defines no mass assignment")


@dataclass
class ActuationGroup:
    """Shared rest-length signal for a labelled set of springs.

    ``sinusoid`` drives ``l0 * (1 + amplitude * sin(2*pi*frequency*t + phase))``;
    ``constant-expansion`` holds ``l0 * (1 + amplitude)``.  ``|amplitude| < 1``
    keeps rest lengths positive.
    """

    label: str
    mode: str = SINUSOID
    amplitude: float = 0.0
    frequency: float = 1.0
    phase: float = 0.0


@dataclass
class ContactPlane:
    """Half-space constraint ``x . normal >= offset`` with penalty response.

    Penetrating masses get a normal force ``penalty * depth`` plus Coulomb
    friction opposing tangential velocity, capped so one step can at most
    cancel the tangential motion.
    """

    normal: Vec3
    offset: float = 0.0
    penalty: float = 1e5
    friction: float = 0.0


def contact_floor(y: float = 0.0, penalty: float = 1e5, friction: float = 0.0) -> ContactPlane:
    """Horizontal floor plane at height ``y``."""
    return ContactPlane(normal=(0.0, 1.0, 0.0), offset=y, penalty=penalty, friction=friction)


@dataclass
class Scene:
    """Complete simulation description.

    Masses and springs are indexed by the order they were added; ``id`` fields
    mirror that order.  A scene is immutable while the engine runs except
    through the engine's command channel.
    """

    masses: list[Mass] = field(default_factory=list)
    springs: list[Spring] = field(default_factory=list)
    gravity: Vec3 = DEFAULT_GRAVITY
    dt: float = DEFAULT_DT
    damping: float = 0.0
    groups: dict[str, ActuationGroup] = field(default_factory=dict)
    planes: list[ContactPlane] = field(default_factory=list)
    materials: list[Material] = field(default_factory=list)

    def __post_init__(self):
        self._pairs = {(min(s.i, s.j), max(s.i, s.j)) for s in self.springs}

    def add_mass(self, x, m: float = DEFAULT_MASS_PER_NODE, v=(0.0, 0.0, 0.0),
                 f_ext=(0.0, 0.0, 0.0), fixed: bool = False) -> int:
        """Append a mass and return its id."""
        mass = Mass(id=len(self.masses), m=float(m), x=_vec3(x), v=_vec3(v),
                    f_ext=_vec3(f_ext), fixed=bool(fixed))
        self.masses.append(mass)
        return mass.id

    def add_spring(self, i: int, j: int, k: float, l0: float | None = None,
                   group: str | None = None) -> int:
        """Append a spring; ``l0=None`` uses the current endpoint distance.

        Raises ``ValueError`` on a duplicate unordered pair so scenes built
        through this constructor never hold two springs between the same
        masses.
        """
        pair = (min(i, j), max(i, j))
        if pair in self._pairs:
            raise ValueError(f"duplicate spring between masses {i} and {j}")
        if l0 is None:
            xi, xj = self.masses[i].x, self.masses[j].x
            l0 = math.dist(xi, xj)
        spring = Spring(id=len(self.springs), i=int(i), j=int(j), k=float(k),
                        l0=float(l0), group=group)
        self.springs.append(spring)
        self._pairs.add(pair)
        return spring.id

    def add_group(self, group: ActuationGroup) -> None:
        if group.label in self.groups:
            raise ValueError(f"duplicate actuation group {group.label!r}")
        self.groups[group.label] = group

    @property
    def mass_count(self) -> int:
        return len(self.masses)

    @property
    def spring_count(self) -> int:
        return len(self.springs)

    def degrees(self) -> list[int]:
        """Spring degree of each mass."""
        deg = [0] * len(self.masses)
        for s in self.springs:
            deg[s.i] += 1
            deg[s.j] += 1
        return deg


def actuated_rest_length(spring: Spring, group: ActuationGroup, t: float) -> float:
    """Rest length of ``spring`` at time ``t`` under ``group``'s signal."""
    if group.mode == CONSTANT_EXPANSION:
        return spring.l0 * (1.0 + group.amplitude)
    return spring.l0 * (1.0 + group.amplitude *
                        math.sin(2.0 * math.pi * group.frequency * t + group.phase))


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by :func:`validate_scene`."""

    code: str
    where: str
    message: str

    def __str__(self):
        return f"{self.where}: {self.message}"


def _finite3(v) -> bool:
    return all(math.isfinite(c) for c in v)


def validate_scene(scene: Scene) -> list[Violation]:
    """Check every type invariant; returns an empty list iff the scene is valid.

    Violations are data, not faults: each carries the offending element's
    field path.  A scene that passes here is safe input for every engine and
    analysis operation.
    """
    out: list[Violation] = []
    n = len(scene.masses)

    for idx, mass in enumerate(scene.masses):
        where = f"masses[{idx}]"
        if mass.id != idx:
            out.append(Violation("bad-id", where + ".id", f"id {mass.id} != position {idx}"))
        if not (math.isfinite(mass.m) and mass.m > 0):
            out.append(Violation("nonpositive-mass", where + ".m", f"mass must be > 0, got {mass.m}"))
        for name in ("x", "v", "f_ext"):
            if not _finite3(getattr(mass, name)):
                out.append(Violation("non-finite", f"{where}.{name}", "components must be finite"))

    seen_pairs: dict[tuple[int, int], int] = {}
    for idx, s in enumerate(scene.springs):
        where = f"springs[{idx}]"
        if s.id != idx:
            out.append(Violation("bad-id", where + ".id", f"id {s.id} != position {idx}"))
        if s.i == s.j:
            out.append(Violation("self-loop", where, f"spring connects mass {s.i} to itself"))
        for end in ("i", "j"):
            v = getattr(s, end)
            if not (0 <= v < n):
                out.append(Violation("invalid-endpoint", f"{where}.{end}",
                                     f"mass index {v} out of range [0, {n})"))
        if not (math.isfinite(s.k) and s.k > 0):
            out.append(Violation("nonpositive-stiffness", where + ".k", f"k must be > 0, got {s.k}"))
        if not (math.isfinite(s.l0) and s.l0 > 0):
            out.append(Violation("nonpositive-rest-length", where + ".l0",
                                 f"l0 must be > 0, got {s.l0}"))
        pair = (min(s.i, s.j), max(s.i, s.j))
        if pair in seen_pairs:
            out.append(Violation("duplicate-spring", where,
                                 f"pair {pair} already used by springs[{seen_pairs[pair]}]"))
        else:
            seen_pairs[pair] = idx
        if s.group is not None and s.group not in scene.groups:
            out.append(Violation("unknown-group", where + ".group",
                                 f"actuation group {s.group!r} not defined"))

    for label, g in scene.groups.items():
        where = f"groups[{label!r}]"
        if g.label != label:
            out.append(Violation("bad-label", where, f"label {g.label!r} != key {label!r}"))
        if g.mode not in ACTUATION_MODES:
            out.append(Violation("bad-mode", where + ".mode",
                                 f"mode must be one of {ACTUATION_MODES}, got {g.mode!r}"))
        if not (math.isfinite(g.amplitude) and abs(g.amplitude) < 1.0):
            out.append(Violation("amplitude-out-of-range", where + ".amplitude",
                                 f"|amplitude| must be < 1, got {g.amplitude}"))
        if not math.isfinite(g.frequency):
            out.append(Violation("non-finite", where + ".frequency", "frequency must be finite"))

    for idx, p in enumerate(scene.planes):
        where = f"planes[{idx}]"
        if not _finite3(p.normal) or abs(math.hypot(*p.normal) - 1.0) > 1e-9:
            out.append(Violation("non-unit-normal", where + ".normal",
                                 f"|normal| must be 1, got {p.normal}"))
        if not (math.isfinite(p.penalty) and p.penalty > 0):
            out.append(Violation("nonpositive-penalty", where + ".penalty",
                                 f"penalty must be > 0, got {p.penalty}"))
        if not (math.isfinite(p.friction) and p.friction >= 0):
            out.append(Violation("negative-friction", where + ".friction",
                                 f"friction must be >= 0, got {p.friction}"))

    for idx, mat in enumerate(scene.materials):
        where = f"materials[{idx}]"
        if not (math.isfinite(mat.k0) and mat.k0 > 0):
            out.append(Violation("nonpositive-stiffness", where + ".k0",
                                 f"k0 must be > 0, got {mat.k0}"))
        if mat.l_ref is not None and not (math.isfinite(mat.l_ref) and mat.l_ref > 0):
            out.append(Violation("nonpositive-ref-length", where + ".l_ref",
                                 f"l_ref must be > 0, got {mat.l_ref}"))
        ways = [w for w in (mat.density, mat.total_mass, mat.mass_per_node) if w is not None]
        if not ways:
            out.append(Violation("no-mass-assignment", where,
                                 "one of density/total_mass/mass_per_node required"))
        elif any(not (math.isfinite(w) and w > 0) for w in ways):
            out.append(Violation("nonpositive-mass-assignment", where,
                                 "mass assignment values must be > 0"))

    if not (math.isfinite(scene.dt) and scene.dt > 0):
        out.append(Violation("nonpositive-dt", "dt", f"dt must be > 0, got {scene.dt}"))
    if not (math.isfinite(scene.damping) and 0.0 <= scene.damping < 1.0):
        out.append(Violation("damping-out-of-range", "damping",
                             f"damping must be in [0, 1), got {scene.damping}"))
    if not _finite3(scene.gravity):
        out.append(Violation("non-finite", "gravity", "components must be finite"))

    return out
