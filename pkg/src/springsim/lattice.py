"""Lattice generation: voxel grids and best-candidate random fills.

Both builders turn a closed triangle mesh (or box) into a ready-to-simulate
:class:`~springsim.model.Scene`: point masses at sampled interior positions,
springs per the connectivity rule, stiffness assigned from rest length so
shorter springs are proportionally stiffer.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .mesh import TriangleMesh
from .model import Material, Scene

VOXEL = "voxel"
BEST_CANDIDATE = "best-candidate"

# Index offsets of one grid cell's 8 corners.
_CORNERS = np.array([(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1)])
# All 28 unordered corner pairs: 12 cube edges, 12 face diagonals, 4 long
# diagonals.
_CELL_PAIRS = np.array([(a, b) for a in range(8) for b in range(a + 1, 8)])

_STOP_AFTER_REJECTED_ROUNDS = 20


@dataclass
class LatticeSpec:
    """Sampling parameters shared by both lattice modes.

    ``dim`` is the voxel edge length; ``cutoff`` the minimum spacing for the
    random mode.  ``connection_radius`` defaults to 1.75x cutoff, which gives
    the random lattice a mean degree in the same band as the voxel lattice's
    26-neighbor stencil.  ``target_count`` caps placement; otherwise the fill
    runs until 20 consecutive rounds fail the cutoff.
    """

    mode: str = VOXEL
    dim: float | None = None
    cutoff: float | None = None
    candidate_count: int = 100
    k_nearest: int = 3
    connection_radius: float | None = None
    target_count: int | None = None
    seed: int = 0

    def check(self) -> None:
        if self.mode == VOXEL:
            if self.dim is None or not self.dim > 0:
                raise ValueError("voxel mode requires dim > 0")
        elif self.mode == BEST_CANDIDATE:
            if self.cutoff is None or not self.cutoff > 0:
                raise ValueError("best-candidate mode requires cutoff > 0")
            if self.candidate_count < 1:
                raise ValueError("candidate_count must be >= 1")
        else:
            raise ValueError(f"unknown lattice mode {self.mode!r}")

    def edge_radius(self) -> float:
        if self.connection_radius is not None:
            return self.connection_radius
        return 1.75 * self.cutoff


def _resolve_material(material: Material, pitch: float) -> Material:
    """Pin the stiffness reference length to the lattice pitch if unset."""
    if material.l_ref is None:
        return dataclasses.replace(material, l_ref=pitch)
    return material


def _assemble(positions: np.ndarray, pairs: np.ndarray, material: Material,
              volume: float) -> Scene:
    node_mass = material.node_mass(len(positions), volume=volume or None)
    scene = Scene(materials=[material])
    for p in positions:
        scene.add_mass(tuple(p), m=node_mass)
    for a, b in pairs:
        l0 = float(np.linalg.norm(positions[b] - positions[a]))
        scene.add_spring(int(a), int(b), k=material.stiffness(l0), l0=l0)
    return scene


def build_voxel_lattice(mesh: TriangleMesh, spec: LatticeSpec,
                        material: Material | None = None) -> Scene:
    """Fill ``mesh`` with a cubic grid of pitch ``spec.dim``.

    Grid nodes are anchored at the mesh bounding-box minimum corner; nodes
    outside the mesh are culled.  Every grid cell contributes springs for
    each of its 28 corner pairs whose endpoints both survived culling, and
    cells sharing a face share those springs, so each mass ends up with at
    most 26 neighbors.
    """
    spec.check()
    if spec.mode != VOXEL:
        raise ValueError("spec.mode must be 'voxel'")
    material = _resolve_material(material or Material(), spec.dim)

    lo, hi = mesh.bounds()
    dim = spec.dim
    counts = np.floor((hi - lo) / dim + 1e-9).astype(int) + 1
    nx, ny, nz = (int(c) for c in counts)

    ii, jj, kk = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    nodes = lo + np.stack([ii, jj, kk], axis=-1).reshape(-1, 3) * dim
    inside = mesh.contains(nodes).reshape(nx, ny, nz)
    n_masses = int(inside.sum())
    if n_masses == 0:
        raise ValueError("no masses generated: mesh interior is empty at this pitch")

    # mass ids in (i, j, k) lexicographic order over the surviving nodes
    mass_id = np.full((nx, ny, nz), -1, dtype=np.int64)
    mass_id[inside] = np.arange(n_masses)
    positions = nodes.reshape(nx, ny, nz, 3)[inside]

    cells = np.stack(np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), np.arange(nz - 1),
                                 indexing="ij"), axis=-1).reshape(-1, 3)
    collected = []
    for ca, cb in _CELL_PAIRS:
        a = cells + _CORNERS[ca]
        b = cells + _CORNERS[cb]
        ida = mass_id[a[:, 0], a[:, 1], a[:, 2]]
        idb = mass_id[b[:, 0], b[:, 1], b[:, 2]]
        ok = (ida >= 0) & (idb >= 0)
        pair = np.stack([ida[ok], idb[ok]], axis=1)
        collected.append(pair)
    pairs = np.concatenate(collected) if collected else np.zeros((0, 2), dtype=np.int64)
    pairs = np.sort(pairs, axis=1)
    pairs = np.unique(pairs, axis=0)

    return _assemble(positions, pairs, material, mesh.volume())


def _sample_interior(mesh: TriangleMesh, rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform points inside the mesh by bounding-box rejection."""
    lo, hi = mesh.bounds()
    out = np.empty((0, 3))
    dry_batches = 0
    while len(out) < n:
        batch = rng.uniform(lo, hi, size=(max(4 * n, 64), 3))
        keep = batch[mesh.contains(batch)]
        dry_batches = dry_batches + 1 if len(keep) == 0 else 0
        if dry_batches >= 50:
            raise ValueError("region has zero volume: interior sampling found no points")
        out = np.concatenate([out, keep])
    return out[:n]


def build_random_lattice(mesh: TriangleMesh, spec: LatticeSpec,
                         material: Material | None = None) -> Scene:
    """Fill ``mesh`` by Mitchell's best-candidate sampling.

    Each round draws ``candidate_count`` uniform interior points and keeps the
    one with the largest summed distance to its ``k_nearest`` already-placed
    neighbors — but only if its nearest neighbor is at least ``cutoff`` away.
    After 20 consecutive rounds without a placement the region is considered
    full.  Springs join every pair closer than the connection radius.
    """
    spec.check()
    if spec.mode != BEST_CANDIDATE:
        raise ValueError("spec.mode must be 'best-candidate'")
    if mesh.volume() <= 0.0:
        raise ValueError("region has zero volume")
    material = _resolve_material(material or Material(), spec.cutoff)
    rng = np.random.default_rng(spec.seed)

    placed = [_sample_interior(mesh, rng, 1)[0]]
    target = spec.target_count if spec.target_count is not None else np.inf
    rejected_streak = 0
    while len(placed) < target and rejected_streak < _STOP_AFTER_REJECTED_ROUNDS:
        cands = _sample_interior(mesh, rng, spec.candidate_count)
        pts = np.asarray(placed)
        d = np.linalg.norm(cands[:, None, :] - pts[None, :, :], axis=2)  # (cand, placed)
        k = min(spec.k_nearest, len(placed))
        knearest_sum = np.sort(d, axis=1)[:, :k].sum(axis=1)
        best = int(np.argmax(knearest_sum))
        if d[best].min() < spec.cutoff:
            rejected_streak += 1
            continue
        rejected_streak = 0
        placed.append(cands[best])

    positions = np.asarray(placed)
    tree = cKDTree(positions)
    pairs = np.array(sorted(tree.query_pairs(spec.edge_radius())), dtype=np.int64)
    if pairs.size == 0:
        pairs = np.zeros((0, 2), dtype=np.int64)
    return _assemble(positions, pairs, material, mesh.volume())


def build_lattice(mesh: TriangleMesh, spec: LatticeSpec,
                  material: Material | None = None) -> Scene:
    """Dispatch on ``spec.mode``."""
    if spec.mode == VOXEL:
        return build_voxel_lattice(mesh, spec, material)
    return build_random_lattice(mesh, spec, material)
