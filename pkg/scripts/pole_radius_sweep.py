"""Loop-phase error of the fitted channels as a function of the (fixed) pole radius.

    python scripts/pole_radius_sweep.py --radius 0.188 --orders 5 --pairs 3
"""

import argparse
import time

import numpy as np

from spherefdn.acoustics import SphereSpec, sphere_mode_series
from spherefdn.allpass import DesignFailure, allpass_loop_phase, design_targets, fit_loop


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--radius", type=float, default=0.188)
    ap.add_argument("--orders", type=int, default=5)
    ap.add_argument("--pairs", type=int, default=3)
    ap.add_argument("--rho", type=float, nargs="*", default=[0.9, 0.93, 0.95, 0.96, 0.97, 0.98])
    ap.add_argument("--fs", type=float, default=44100.0)
    args = ap.parse_args()

    spec = SphereSpec(args.radius, 23.0, max_order=args.orders - 1, roots_per_order=12)
    series = sphere_mode_series(spec)
    print("rho   " + " ".join(f"n={s.label:<6}" for s in series) + "  worst   time")
    for rho in args.rho:
        errs, t0 = [], time.perf_counter()
        for ser in series:
            target = design_targets(ser, args.fs, 4000.0, args.pairs + 1)
            try:
                d = fit_loop(target, args.pairs, rho)
                err = allpass_loop_phase(d, np.array(target.omegas)) - np.array(target.target_phases)
                errs.append(float(np.max(np.abs(err))))
            except DesignFailure:
                errs.append(float("inf"))
        print(f"{rho:.3f} " + " ".join(f"{e:<8.4f}" for e in errs) + f" {max(errs):.4f}  {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
