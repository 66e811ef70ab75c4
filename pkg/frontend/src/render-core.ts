/**
 * Pure geometry preparation: snapshot (+ optional topology) in, typed draw
 * arrays out.  No renderer state lives here, so replaying the same snapshot
 * stream produces bit-identical draw lists — the three.js layer in viewer.ts
 * only uploads what this module computes.
 */
import { z } from "zod";

import { Snapshot } from "./protocol";

/** Browsers cannot draw a million line segments; cap what we hand the GPU. */
export const SPRING_LOD_LIMIT = 50_000;

/** Spring endpoint pairs from a locally loaded scene file. */
export interface Topology {
  /** Flat [i0, j0, i1, j1, ...] mass-id pairs. */
  pairs: Uint32Array;
  springCount: number;
}

const sceneFileSchema = z.object({
  springs: z.array(
    z.object({ i: z.number().int().nonnegative(), j: z.number().int().nonnegative() }),
  ),
});

/**
 * Extract spring topology from scene-file JSON (the same file the server was
 * started with).  Only endpoint ids are read; everything else is ignored.
 */
export function parseTopology(sceneJson: unknown): Topology {
  const parsed = sceneFileSchema.safeParse(sceneJson);
  if (!parsed.success) {
    throw new Error("not a scene file: expected a springs array with i/j endpoints");
  }
  const springs = parsed.data.springs;
  const pairs = new Uint32Array(springs.length * 2);
  springs.forEach((s, idx) => {
    pairs[idx * 2] = s.i;
    pairs[idx * 2 + 1] = s.j;
  });
  return { pairs, springCount: springs.length };
}

export interface DrawList {
  /** Point positions, xyz per drawn mass. */
  points: Float32Array;
  /** Mass id per point (selection picking indexes this). */
  pointIds: Uint32Array;
  /** Line segment endpoints, xyzxyz per drawn spring. */
  segments: Float32Array;
  /** Springs drawn after decimation survival and the LOD cutoff. */
  drawnSprings: number;
  /** Springs whose endpoints both survived decimation (pre-LOD). */
  drawableSprings: number;
}

/**
 * Build draw arrays for one snapshot.
 *
 * The snapshot may be decimated, so springs are drawable only when both
 * endpoints are present.  Above SPRING_LOD_LIMIT drawable springs, a
 * deterministic stride keeps every k-th spring, preserving a uniform sample
 * of the structure rather than a spatial bias.
 */
export function buildDrawList(snapshot: Snapshot, topology: Topology | null): DrawList {
  const rows = snapshot.positions;
  const points = new Float32Array(rows.length * 3);
  const pointIds = new Uint32Array(rows.length);
  const where = new Map<number, number>(); // mass id -> row index
  rows.forEach((row, idx) => {
    const [id, x, y, z] = row;
    pointIds[idx] = id;
    points[idx * 3] = x;
    points[idx * 3 + 1] = y;
    points[idx * 3 + 2] = z;
    where.set(id, idx);
  });

  if (!topology) {
    return { points, pointIds, segments: new Float32Array(0), drawnSprings: 0, drawableSprings: 0 };
  }

  const drawable: number[] = []; // indices into topology pairs
  for (let s = 0; s < topology.springCount; s += 1) {
    if (where.has(topology.pairs[s * 2]!) && where.has(topology.pairs[s * 2 + 1]!)) {
      drawable.push(s);
    }
  }
  const stride = Math.max(1, Math.ceil(drawable.length / SPRING_LOD_LIMIT));
  const drawn: number[] = [];
  for (let idx = 0; idx < drawable.length; idx += stride) drawn.push(drawable[idx]!);

  const segments = new Float32Array(drawn.length * 6);
  drawn.forEach((s, outIdx) => {
    const a = where.get(topology.pairs[s * 2]!)!;
    const b = where.get(topology.pairs[s * 2 + 1]!)!;
    segments.set(points.subarray(a * 3, a * 3 + 3), outIdx * 6);
    segments.set(points.subarray(b * 3, b * 3 + 3), outIdx * 6 + 3);
  });

  return {
    points,
    pointIds,
    segments,
    drawnSprings: drawn.length,
    drawableSprings: drawable.length,
  };
}

/**
 * Map a screen-space drag to a world-space force for apply_force.
 *
 * The drag lives in the camera's image plane: right and up on screen become
 * the camera's right and up axes in world space, scaled by newtons-per-pixel.
 * Screen y grows downward, so it is negated.
 */
export function dragToForce(
  dxPixels: number,
  dyPixels: number,
  view: { yaw: number; pitch: number },
  newtonsPerPixel: number,
): [number, number, number] {
  const { yaw, pitch } = view;
  // camera right: horizontal, perpendicular to the view direction
  const rightX = Math.cos(yaw);
  const rightZ = -Math.sin(yaw);
  // camera up: view direction tilted by pitch
  const upX = Math.sin(yaw) * Math.sin(pitch);
  const upY = Math.cos(pitch);
  const upZ = Math.cos(yaw) * Math.sin(pitch);
  const fx = newtonsPerPixel * (dxPixels * rightX - dyPixels * upX);
  const fy = newtonsPerPixel * (-dyPixels * upY);
  const fz = newtonsPerPixel * (dxPixels * rightZ - dyPixels * upZ);
  return [fx, fy, fz];
}
