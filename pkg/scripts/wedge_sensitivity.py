"""Inner-cone width of the wedge example as the z-grid radius grows.

The inner cone at 0 is cut by the two rows with the smallest multiplier
m = 1/(R^2+1), so its angular width should track 2/(R^2+1) and the cone
should close onto the diagonal ray.
"""

import argparse

import numpy as np

from vepcone.approx import angular_width_2d, homogenized_solve, inner_cone
from vepcone.registry import load_example


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radii", nargs="+", type=float, default=[1, 2, 5, 10, 20, 50])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    inst = load_example("ex31", seed=args.seed)
    x = np.zeros(2)
    print(f"{'R_z':>6} {'width':>12} {'2/(R^2+1)':>12} {'margin':>12}")
    for R in args.radii:
        Z = inst.z_sample_sized(R_z=R)
        width = angular_width_2d(inner_cone(inst, x, Z=Z))
        h = homogenized_solve(inst, x, Z=Z)
        print(f"{R:6g} {width:12.6g} {2 / (R * R + 1):12.6g} {h.margin:12.6g}")


if __name__ == "__main__":
    main()
