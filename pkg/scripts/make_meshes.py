"""Write the procedural test meshes as OFF files."""

import argparse
from pathlib import Path

from confform.mesh import (
    euler_characteristic,
    generate_double_torus_with_hole,
    generate_torus_with_hole,
    generate_torus_with_round_hole,
    write_off,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="meshes")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meshes = {
        "torus_24x12.off": generate_torus_with_hole(2.0, 0.7, 24, 12, 6),
        "torus_24x24.off": generate_torus_with_hole(2.0, 0.7, 24, 24, 6),
        "torus_round_24.off": generate_torus_with_round_hole(2.0, 0.7, 24),
        "double_torus.off": generate_double_torus_with_hole(),
    }
    for name, mesh in meshes.items():
        write_off(mesh, out / name)
        print(f"{name}: V={mesh.vertex_count} F={mesh.face_count} chi={euler_characteristic(mesh)} "
              f"boundary={len(mesh.boundary_loop)}")


if __name__ == "__main__":
    main()
