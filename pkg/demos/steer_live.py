"""Steer a live simulation over its socket protocol, end to end.

Starts a steering server on a falling-cube scene, connects as a plain TCP
client, and walks through a short session: watch a few snapshots arrive,
pause the world, push the cube sideways, resume, let go, and watch the
energy numbers react.  Everything on the wire is newline-delimited JSON, so the
exchange below is exactly what any viewer - including the browser UI -
would see.

Run:  python demos/steer_live.py
"""

import json
import socket

from springsim import (
    LatticeSpec,
    SteerServer,
    box_mesh,
    build_voxel_lattice,
    contact_floor,
)


def falling_cube():
    scene = build_voxel_lattice(box_mesh((0, 0.5, 0), (0.3, 0.8, 0.3)),
                                LatticeSpec(dim=0.1))
    scene.gravity = (0.0, -9.81, 0.0)
    scene.planes.append(contact_floor(penalty=5e4, friction=0.3))
    return scene


def send(fh, message) -> None:
    fh.write(json.dumps(message).encode() + b"\n")
    fh.flush()


def recv(fh):
    return json.loads(fh.readline())


def show(snapshot) -> None:
    epe, gpe, ke = snapshot["energies"]
    print(f"  n={snapshot['n']:>7}  t={snapshot['t']:.3f}s  "
          f"epe={epe:8.3f}  gpe={gpe:8.3f}  ke={ke:8.3f}")


def main() -> None:
    server = SteerServer(falling_cube(), port=0, rate=10.0)
    server.start()
    print(f"server on port {server.port}")
    try:
        with socket.create_connection(("127.0.0.1", server.port)) as sock:
            fh = sock.makefile("rwb")
            send(fh, {"type": "hello", "version": 1})
            hello = recv(fh)
            print(f"handshake: protocol v{hello['version']}")

            print("three snapshots of the cube falling:")
            for _ in range(3):
                show(recv(fh))

            print("pause - the counter freezes:")
            send(fh, {"type": "command", "name": "pause"})
            frozen = [recv(fh) for _ in range(3)]
            for snapshot in frozen[-2:]:
                show(snapshot)

            print("give it a sideways shove while paused, then resume:")
            send(fh, {"type": "command", "name": "apply_force",
                      "ids": [0, 1, 2, 3], "force": [40.0, 0.0, 0.0]})
            send(fh, {"type": "command", "name": "resume"})
            for _ in range(2):
                show(recv(fh))

            print("let go - friction bleeds the push back off:")
            send(fh, {"type": "command", "name": "clear_forces"})
            for _ in range(3):
                show(recv(fh))
    finally:
        server.stop()
    print("done")


if __name__ == "__main__":
    main()
