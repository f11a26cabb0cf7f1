"""Echo density of a box network as the feedback matrix moves from diagonal to Lambertian.

    python scripts/echo_density.py --dims 3 4 5 --channels 8
"""

import argparse
from dataclasses import replace

import numpy as np

from spherefdn.acoustics import BoxSpec
from spherefdn.fdn import build_box_fdn, diagonal_matrix, diffusion_blend, lambertian_matrix, render


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dims", type=float, nargs=3, default=[3.0, 4.0, 5.0])
    ap.add_argument("--channels", type=int, default=8)
    ap.add_argument("--seconds", type=float, default=0.5)
    ap.add_argument("--threshold", type=float, default=1e-4)
    args = ap.parse_args()

    spec = BoxSpec(*args.dims)
    base = build_box_fdn(spec, args.channels)
    n = args.channels
    print("alpha  nonzero_samples  density_per_ms")
    for alpha in (0.0, 0.1, 0.25, 0.5, 0.75, 1.0):
        m = diffusion_blend(alpha, diagonal_matrix(np.ones(n)), lambertian_matrix(n))
        y = render(replace(base, matrix=m), seconds=args.seconds)
        count = int(np.count_nonzero(np.abs(y) > args.threshold))
        print(f"{alpha:5.2f}  {count:15d}  {count / (1000 * args.seconds):14.2f}")


if __name__ == "__main__":
    main()
