"""Triangle meshes: loading, volume, and point-membership queries.

The membership test is ray-crossing parity, robust against grazing hits by
retrying with a different (fixed, seeded) ray direction whenever an
intersection lands too close to a triangle edge or vertex.  Points lying on
the surface itself count as inside, so lattice nodes that fall exactly on a
mesh face are kept.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Tolerances for the parity test, relative to mesh extent where dimensional.
_EPS_PARALLEL = 1e-12   # |det| below this * |e1||e2| -> ray parallel to plane
_EPS_BARY = 1e-10       # barycentric margin flagging edge/vertex grazes
_EPS_SURFACE = 1e-9     # |t| below this * scale -> origin lies on the triangle
_MAX_RETRIES = 8
_CHUNK = 2048


def _ray_directions(n: int) -> np.ndarray:
    """Fixed sequence of unit ray directions; first is a hand-picked one
    unlikely to align with axis-aligned/diagonal mesh features."""
    rng = np.random.default_rng(20240315)
    dirs = rng.normal(size=(n, 3))
    dirs[0] = (0.2908428314, 0.6118675725, 0.7355190449)
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


_DIRS = _ray_directions(_MAX_RETRIES)


@dataclass
class TriangleMesh:
    """Indexed triangle soup: ``vertices`` (m, 3) float64, ``faces`` (n, 3) int64."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face indices out of range")

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box as (min corner, max corner)."""
        if len(self.vertices) == 0:
            z = np.zeros(3)
            return z, z
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def extent(self) -> float:
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))

    def volume(self) -> float:
        """Enclosed volume from the divergence theorem (signed tetrahedra
        against the origin); orientation-independent via the absolute value."""
        if self.is_empty:
            return 0.0
        tri = self.vertices[self.faces]  # (n, 3, 3)
        v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
        signed = np.einsum("ij,ij->i", v0, np.cross(v1, v2)) / 6.0
        return float(abs(signed.sum()))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Vectorized membership test; boolean array over ``points`` (n, 3)."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.is_empty:
            return np.zeros(len(points), dtype=bool)
        out = np.empty(len(points), dtype=bool)
        for start in range(0, len(points), _CHUNK):
            stop = min(start + _CHUNK, len(points))
            out[start:stop] = self._contains_chunk(points[start:stop])
        return out

    def _contains_chunk(self, pts: np.ndarray) -> np.ndarray:
        tri = self.vertices[self.faces]
        e1 = tri[:, 1] - tri[:, 0]
        e2 = tri[:, 2] - tri[:, 0]
        edge_scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
        t_eps = _EPS_SURFACE * max(self.extent(), 1.0)

        inside = np.zeros(len(pts), dtype=bool)
        pending = np.arange(len(pts))
        for d in _DIRS:
            if len(pending) == 0:
                break
            parity, on_surface, degenerate = self._cast(pts[pending], d, tri, e1, e2,
                                                       edge_scale, t_eps)
            inside[pending] = on_surface | parity
            # on-surface verdicts are final even if another triangle grazed
            retry = degenerate & ~on_surface
            pending = pending[retry]
        return inside

    def _cast(self, pts, d, tri, e1, e2, edge_scale, t_eps):
        """One parity pass: Moeller-Trumbore for all points against all
        triangles along direction ``d``.  Returns (odd-crossings, origin-on-
        triangle, saw-degenerate-hit) per point."""
        p = np.cross(d, e2)                          # (n_tri, 3)
        det = np.einsum("ij,ij->i", e1, p)           # (n_tri,)
        usable = np.abs(det) > _EPS_PARALLEL * np.maximum(edge_scale, 1e-300)

        s = pts[:, None, :] - tri[None, :, 0, :]     # (n_pt, n_tri, 3)
        u = np.einsum("pij,ij->pi", s, p)
        q = np.cross(s, e1[None, :, :])
        v = np.einsum("pij,j->pi", q, d)
        t = np.einsum("pij,ij->pi", q, e2)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(usable, 1.0 / det, 0.0)
        u = u * inv
        v = v * inv
        t = t * inv

        in_tri_loose = usable & (u >= -_EPS_BARY) & (v >= -_EPS_BARY) & (u + v <= 1 + _EPS_BARY)
        on_surface = (np.abs(t) <= t_eps) & in_tri_loose
        ahead = t > t_eps
        hit = ahead & in_tri_loose
        grazing = hit & ((u <= _EPS_BARY) | (v <= _EPS_BARY) | (u + v >= 1 - _EPS_BARY))

        parity = (hit.sum(axis=1) % 2).astype(bool)
        return parity, on_surface.any(axis=1), grazing.any(axis=1)


def point_inside(mesh: TriangleMesh, p) -> bool:
    """Scalar membership test: is ``p`` inside (or on) the mesh surface?"""
    return bool(mesh.contains(np.asarray(p, dtype=np.float64).reshape(1, 3))[0])


def box_mesh(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> TriangleMesh:
    """Axis-aligned box as 12 outward-facing triangles."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if np.any(hi <= lo):
        raise ValueError("box must have positive extent on every axis")
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    v = np.array([
        [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
        [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
    ])
    f = np.array([
        [0, 2, 1], [0, 3, 2],  # z = z0, normal -z
        [4, 5, 6], [4, 6, 7],  # z = z1, normal +z
        [0, 1, 5], [0, 5, 4],  # y = y0, normal -y
        [3, 6, 2], [3, 7, 6],  # y = y1, normal +y
        [0, 4, 7], [0, 7, 3],  # x = x0, normal -x
        [1, 2, 6], [1, 6, 5],  # x = x1, normal +x
    ])
    return TriangleMesh(v, f)


def unit_cube() -> TriangleMesh:
    return box_mesh((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


def load_mesh(path) -> TriangleMesh:
    """Read an ASCII ``v``/``f`` triangle mesh (1-based indices).

    Polygon faces are fan-triangulated; ``v/vt/vn`` index bundles keep only
    the vertex index; negative indices count back from the vertices read so
    far; every other record type is ignored.
    """
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise ValueError(f"{path}:{lineno}: vertex needs 3 coordinates")
            vertices.append([float(c) for c in parts[1:4]])
        elif parts[0] == "f":
            idx = []
            for tok in parts[1:]:
                head = tok.split("/")[0]
                i = int(head)
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            if len(idx) < 3:
                raise ValueError(f"{path}:{lineno}: face needs at least 3 vertices")
            for a in range(1, len(idx) - 1):
                faces.append([idx[0], idx[a], idx[a + 1]])
    return TriangleMesh(np.asarray(vertices, dtype=np.float64).reshape(-1, 3),
                        np.asarray(faces, dtype=np.int64).reshape(-1, 3))


def save_mesh(mesh: TriangleMesh, path) -> None:
    """Write the ``v``/``f`` format read by :func:`load_mesh`."""
    lines = [f"v {float(x)!r} {float(y)!r} {float(z)!r}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")
