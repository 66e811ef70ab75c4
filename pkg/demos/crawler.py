"""A two-segment soft block that drags itself across a frictional floor.

The bottom rows of springs are split into a front and a rear actuation
group driven by the same sinusoid a quarter period apart.  The phase lag
turns symmetric squeezing into a traveling wave: each segment lengthens
while the other grips, and Coulomb friction rectifies the wiggle into
net forward motion - the standard inchworm trick.

Run:  python demos/crawler.py
"""

import numpy as np

from springsim import (
    ActuationGroup,
    Engine,
    LatticeSpec,
    box_mesh,
    build_voxel_lattice,
    contact_floor,
)

PITCH = 0.1
DRIVE_HZ = 2.0


def build_crawler():
    mesh = box_mesh((0.0, 0.0, 0.0), (4 * PITCH, PITCH, PITCH))
    scene = build_voxel_lattice(mesh, LatticeSpec(dim=PITCH))
    scene.gravity = (0.0, -9.81, 0.0)
    scene.dt = 5e-5
    scene.planes.append(contact_floor(y=0.0, penalty=2e4, friction=0.8))

    # Ground-level longitudinal springs, front half vs rear half, driven a
    # quarter period apart.
    mid = 2 * PITCH
    scene.add_group(ActuationGroup("rear", amplitude=0.25,
                                   frequency=DRIVE_HZ,
                                   phase=0.5 * np.pi))
    scene.add_group(ActuationGroup("front", amplitude=0.25,
                                   frequency=DRIVE_HZ, phase=0.0))
    for spring in scene.springs:
        a = scene.masses[spring.i].x
        b = scene.masses[spring.j].x
        on_floor = a[1] == 0.0 and b[1] == 0.0
        longitudinal = abs(a[0] - b[0]) > 1e-12
        if on_floor and longitudinal:
            center = 0.5 * (a[0] + b[0])
            spring.group = "rear" if center < mid else "front"
    return scene


def main() -> None:
    scene = build_crawler()
    engine = Engine(scene)
    engine.set_damping(2e-4)  # a little dissipation keeps the gait steady

    steps_per_second = round(1.0 / scene.dt)
    start = float(np.mean(engine.x[:, 0]))
    print(f"{len(scene.masses)} masses, {len(scene.springs)} springs, "
          f"drive {DRIVE_HZ:g} Hz")
    print(f"{'t (s)':>6} {'x center (m)':>14} {'travel (m)':>12}")
    for second in range(1, 9):
        engine.step(steps_per_second)
        center = float(np.mean(engine.x[:, 0]))
        print(f"{second:>6} {center:>14.4f} {center - start:>12.4f}")

    travel = float(np.mean(engine.x[:, 0])) - start
    body_lengths = travel / (4 * PITCH)
    print(f"net travel {travel:.4f} m "
          f"({body_lengths:+.2f} body lengths in 8 s)")


if __name__ == "__main__":
    main()
