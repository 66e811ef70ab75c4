"""Scene persistence: a strict, versioned JSON document format.

One scene per document, human-readable and line-diffable.  Numbers are
written with Python's shortest round-trip representation, so parsing a
rendered document reproduces every finite float bit-exactly.  Parsing is
strict: unknown fields, missing required fields, and non-contiguous ids are
all rejected with the offending path named, and the physical invariants of
the scene are checked before a :class:`~springsim.model.Scene` is returned.
"""

from __future__ import annotations

import json

from .model import ActuationGroup, ContactPlane, Material, Scene, validate_scene

SCHEMA_VERSION = 1

__all__ = ["SCHEMA_VERSION", "SceneFormatError", "render_scene", "parse_scene",
           "save_scene", "load_scene"]


class SceneFormatError(ValueError):
    """A scene document that cannot be accepted, with the offending path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# ------------------------------------------------------------ rendering

def _mass_doc(m) -> dict:
    return {"id": m.id, "m": m.m, "x": list(m.x), "v": list(m.v),
            "f_ext": list(m.f_ext), "fixed": m.fixed}


def _spring_doc(s) -> dict:
    return {"id": s.id, "i": s.i, "j": s.j, "k": s.k, "l0": s.l0,
            "group": s.group}


def _material_doc(m: Material) -> dict:
    return {"name": m.name, "k0": m.k0, "l_ref": m.l_ref, "density": m.density,
            "total_mass": m.total_mass, "mass_per_node": m.mass_per_node}


def _group_doc(g: ActuationGroup) -> dict:
    return {"label": g.label, "mode": g.mode, "amplitude": g.amplitude,
            "frequency": g.frequency, "phase": g.phase}


def _plane_doc(p: ContactPlane) -> dict:
    return {"normal": list(p.normal), "offset": p.offset, "penalty": p.penalty,
            "friction": p.friction}


def render_scene(scene: Scene) -> str:
    """Serialize ``scene`` to the versioned document text."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "gravity": list(scene.gravity),
        "dt": scene.dt,
        "damping": scene.damping,
        "masses": [_mass_doc(m) for m in scene.masses],
        "springs": [_spring_doc(s) for s in scene.springs],
        "materials": [_material_doc(m) for m in scene.materials],
        "groups": [_group_doc(g) for g in scene.groups.values()],
        "planes": [_plane_doc(p) for p in scene.planes],
    }
    try:
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    except ValueError as exc:
        raise SceneFormatError("$", f"non-finite value in scene: {exc}") from exc


# ------------------------------------------------------------ parsing

def _expect(obj, path: str, required: dict, optional: dict) -> dict:
    """Field-checked view of a JSON object: types enforced, unknowns rejected."""
    if not isinstance(obj, dict):
        raise SceneFormatError(path, f"expected an object, got {type(obj).__name__}")
    known = set(required) | set(optional)
    for key in obj:
        if key not in known:
            raise SceneFormatError(f"{path}.{key}", "unknown field")
    out = {}
    for key, kind in required.items():
        if key not in obj:
            raise SceneFormatError(path, f"missing required field {key!r}")
        out[key] = _coerce(obj[key], f"{path}.{key}", kind)
    for key, (kind, default) in optional.items():
        out[key] = _coerce(obj[key], f"{path}.{key}", kind) if key in obj else default
    return out


def _coerce(value, path: str, kind):
    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SceneFormatError(path, f"expected a number, got {type(value).__name__}")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise SceneFormatError(path, f"expected an integer, got {type(value).__name__}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise SceneFormatError(path, f"expected a boolean, got {type(value).__name__}")
        return value
    if kind == "string":
        if not isinstance(value, str):
            raise SceneFormatError(path, f"expected a string, got {type(value).__name__}")
        return value
    if kind == "string?":
        if value is not None and not isinstance(value, str):
            raise SceneFormatError(path, f"expected a string or null, got {type(value).__name__}")
        return value
    if kind == "number?":
        if value is None:
            return None
        return _coerce(value, path, "number")
    if kind == "vec3":
        if (not isinstance(value, list) or len(value) != 3
                or any(isinstance(c, bool) or not isinstance(c, (int, float))
                       for c in value)):
            raise SceneFormatError(path, "expected a list of three numbers")
        return tuple(float(c) for c in value)
    if kind == "list":
        if not isinstance(value, list):
            raise SceneFormatError(path, f"expected a list, got {type(value).__name__}")
        return value
    raise AssertionError(f"unhandled kind {kind}")


_TOP = dict(
    required={"schema_version": "int", "gravity": "vec3", "dt": "number",
              "masses": "list", "springs": "list"},
    optional={"damping": ("number", 0.0), "materials": ("list", []),
              "groups": ("list", []), "planes": ("list", [])},
)

_MASS = dict(
    required={"m": "number", "x": "vec3"},
    optional={"id": ("int", None), "v": ("vec3", (0.0, 0.0, 0.0)),
              "f_ext": ("vec3", (0.0, 0.0, 0.0)), "fixed": ("bool", False)},
)

_SPRING = dict(
    required={"i": "int", "j": "int", "k": "number", "l0": "number"},
    optional={"id": ("int", None), "group": ("string?", None)},
)

_MATERIAL = dict(
    required={"name": "string"},
    optional={"k0": ("number", 10000.0), "l_ref": ("number?", None),
              "density": ("number?", None), "total_mass": ("number?", None),
              "mass_per_node": ("number?", None)},
)

_GROUP = dict(
    required={"label": "string", "mode": "string"},
    optional={"amplitude": ("number", 0.0), "frequency": ("number", 1.0),
              "phase": ("number", 0.0)},
)

_PLANE = dict(
    required={"normal": "vec3"},
    optional={"offset": ("number", 0.0), "penalty": ("number", 1e5),
              "friction": ("number", 0.0)},
)


def parse_scene(text: str) -> Scene:
    """Parse and validate a scene document, or raise :class:`SceneFormatError`.

    Syntax errors keep the decoder's line/column context; schema and physics
    violations name the offending field path.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneFormatError("$", f"malformed document: {exc}") from exc

    top = _expect(raw, "$", **_TOP)
    if top["schema_version"] != SCHEMA_VERSION:
        raise SceneFormatError(
            "$.schema_version",
            f"unsupported version {top['schema_version']} (this reader "
            f"handles {SCHEMA_VERSION})")

    scene = Scene(gravity=top["gravity"], dt=top["dt"], damping=top["damping"])

    for index, entry in enumerate(top["masses"]):
        path = f"$.masses[{index}]"
        fields = _expect(entry, path, **_MASS)
        if fields["id"] is not None and fields["id"] != index:
            raise SceneFormatError(f"{path}.id",
                                   f"ids must be contiguous; expected {index}")
        scene.add_mass(fields["x"], m=fields["m"], v=fields["v"],
                       f_ext=fields["f_ext"], fixed=fields["fixed"])

    count = scene.mass_count
    for index, entry in enumerate(top["springs"]):
        path = f"$.springs[{index}]"
        fields = _expect(entry, path, **_SPRING)
        if fields["id"] is not None and fields["id"] != index:
            raise SceneFormatError(f"{path}.id",
                                   f"ids must be contiguous; expected {index}")
        for end in ("i", "j"):
            if not 0 <= fields[end] < count:
                raise SceneFormatError(f"{path}.{end}",
                                       f"no such mass {fields[end]}")
        try:
            scene.add_spring(fields["i"], fields["j"], k=fields["k"],
                             l0=fields["l0"], group=fields["group"])
        except ValueError as exc:
            raise SceneFormatError(path, str(exc)) from exc

    for index, entry in enumerate(top["materials"]):
        fields = _expect(entry, f"$.materials[{index}]", **_MATERIAL)
        scene.materials.append(Material(**fields))

    for index, entry in enumerate(top["groups"]):
        path = f"$.groups[{index}]"
        fields = _expect(entry, path, **_GROUP)
        try:
            scene.add_group(ActuationGroup(**fields))
        except ValueError as exc:
            raise SceneFormatError(path, str(exc)) from exc

    for index, entry in enumerate(top["planes"]):
        fields = _expect(entry, f"$.planes[{index}]", **_PLANE)
        scene.planes.append(ContactPlane(**fields))

    violations = validate_scene(scene)
    if violations:
        first = violations[0]
        raise SceneFormatError(f"$.{first.where}", first.message)
    return scene


# ------------------------------------------------------------ files

def save_scene(scene: Scene, path) -> None:
    with open(path, "w") as fh:
        fh.write(render_scene(scene))


def load_scene(path) -> Scene:
    with open(path) as fh:
        return parse_scene(fh.read())
