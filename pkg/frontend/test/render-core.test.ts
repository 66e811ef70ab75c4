import { describe, expect, it } from "vitest";

import {
  SPRING_LOD_LIMIT,
  buildDrawList,
  dragToForce,
  parseTopology,
} from "../src/render-core";
import { Snapshot } from "../src/protocol";

function snapshotOf(rows: [number, number, number, number][]): Snapshot {
  return {
    type: "snapshot",
    t: 0,
    n: 0,
    positions: rows,
    energies: [0, 0, 0],
    throughput: 0,
  };
}

describe("parseTopology", () => {
  it("reads endpoint pairs from a scene file and ignores the rest", () => {
    const topo = parseTopology({
      schema_version: 1,
      masses: [{ id: 0 }],
      springs: [
        { id: 0, i: 0, j: 1, k: 1e4, l0: 0.1, group: null },
        { id: 1, i: 1, j: 2, k: 1e4, l0: 0.1, group: "legs" },
      ],
    });
    expect(topo.springCount).toBe(2);
    expect([...topo.pairs]).toEqual([0, 1, 1, 2]);
  });

  it("rejects non-scene json", () => {
    expect(() => parseTopology({ vertices: [] })).toThrow(/scene file/);
    expect(() => parseTopology(null)).toThrow(/scene file/);
  });
});

describe("buildDrawList", () => {
  const topo = parseTopology({
    springs: [
      { i: 0, j: 2 },
      { i: 2, j: 3 }, // 3 is decimated away
      { i: 0, j: 4 },
    ],
  });

  it("draws only springs whose endpoints survived decimation", () => {
    const list = buildDrawList(
      snapshotOf([
        [0, 0, 0, 0],
        [2, 1, 0, 0],
        [4, 0, 1, 0],
      ]),
      topo,
    );
    expect(list.drawableSprings).toBe(2);
    expect(list.drawnSprings).toBe(2);
    // first segment: mass 0 at origin to mass 2 at (1,0,0)
    expect([...list.segments.slice(0, 6)]).toEqual([0, 0, 0, 1, 0, 0]);
    // second segment: mass 0 to mass 4 at (0,1,0)
    expect([...list.segments.slice(6, 12)]).toEqual([0, 0, 0, 0, 1, 0]);
    expect([...list.pointIds]).toEqual([0, 2, 4]);
  });

  it("renders points alone when no topology is loaded", () => {
    const list = buildDrawList(snapshotOf([[7, 1, 2, 3]]), null);
    expect(list.drawnSprings).toBe(0);
    expect([...list.points]).toEqual([1, 2, 3]);
    expect([...list.pointIds]).toEqual([7]);
  });

  it("caps drawn springs at the LOD limit with a uniform stride", () => {
    const springCount = 2 * SPRING_LOD_LIMIT + 123;
    const massCount = springCount + 1;
    const rows: [number, number, number, number][] = [];
    for (let i = 0; i < massCount; i += 1) rows.push([i, i, 0, 0]);
    const chain = {
      springs: Array.from({ length: springCount }, (_, i) => ({ i, j: i + 1 })),
    };
    const list = buildDrawList(snapshotOf(rows), parseTopology(chain));
    expect(list.drawableSprings).toBe(springCount);
    expect(list.drawnSprings).toBeLessThanOrEqual(SPRING_LOD_LIMIT);
    // stride 3 -> roughly a third of the springs, uniformly sampled
    expect(list.drawnSprings).toBe(Math.ceil(springCount / 3));
    expect(list.segments[0]).toBe(0); // spring 0 kept
    expect(list.segments[6]).toBe(3); // then spring 3
  });

  it("is deterministic: the same stream builds bit-identical lists twice", () => {
    const stream = [
      snapshotOf([
        [0, 0.1, 0.2, 0.3],
        [2, 1.1, 0.2, 0.3],
        [4, 0.1, 1.2, 0.3],
      ]),
      snapshotOf([
        [0, 0.15, 0.2, 0.3],
        [2, 1.05, 0.25, 0.3],
        [4, 0.1, 1.25, 0.35],
      ]),
    ];
    const render = () =>
      stream.map((snap) => {
        const list = buildDrawList(snap, topo);
        return Buffer.concat([
          Buffer.from(list.points.buffer.slice(0)),
          Buffer.from(list.segments.buffer.slice(0)),
        ]);
      });
    const first = render();
    const second = render();
    first.forEach((bytes, i) => expect(bytes.equals(second[i]!)).toBe(true));
  });
});

describe("dragToForce", () => {
  it("maps a rightward drag to the camera's right axis", () => {
    const [fx, fy, fz] = dragToForce(10, 0, { yaw: 0, pitch: 0 }, 2.0);
    expect(fx).toBeCloseTo(20);
    expect(fy).toBeCloseTo(0);
    expect(fz).toBeCloseTo(0);
  });

  it("maps a downward drag to a downward force at level pitch", () => {
    const [fx, fy, fz] = dragToForce(0, 10, { yaw: 0, pitch: 0 }, 1.0);
    expect(fx).toBeCloseTo(0);
    expect(fy).toBeCloseTo(-10);
    expect(fz).toBeCloseTo(0);
  });

  it("follows the camera yaw", () => {
    const [fx, , fz] = dragToForce(10, 0, { yaw: Math.PI / 2, pitch: 0 }, 1.0);
    expect(fx).toBeCloseTo(0);
    expect(fz).toBeCloseTo(-10);
  });
});
