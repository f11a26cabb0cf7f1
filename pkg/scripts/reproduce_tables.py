"""Recompute the root, spacing and sphere-frequency tables and diff them against the printed values.

    python scripts/reproduce_tables.py [--csv out_dir]
"""

import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from published import ROOTS, SPACINGS, SPHERE_0188_KHZ  # noqa: E402

from spherefdn.acoustics import SphereSpec, sphere_mode_series  # noqa: E402
from spherefdn.bessel import find_roots, normalized_spacing  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", type=Path, help="directory for per-table CSV output")
    args = ap.parse_args()

    rows = {"roots": [], "spacings": [], "sphere_0188_hz": []}
    series = sphere_mode_series(SphereSpec(0.188, 23.0, max_order=9, roots_per_order=6))
    for n in range(10):
        table = find_roots(n, 6)
        for s, (z, p) in enumerate(zip(table.roots, ROOTS[n]), start=1):
            rows["roots"].append((n, s, z, p, z - p))
        for s, (v, p) in enumerate(zip(normalized_spacing(table), SPACINGS[n]), start=2):
            rows["spacings"].append((n, s, v, p, v - p))
        for s, (f, p) in enumerate(zip(series[n].frequencies, SPHERE_0188_KHZ[n]), start=1):
            rows["sphere_0188_hz"].append((n, s, f, 1000 * p, f - 1000 * p))

    for name, tol in (("roots", 0.005), ("spacings", 5e-4), ("sphere_0188_hz", 2.0)):
        data = rows[name]
        out = [r for r in data if abs(r[4]) > tol]
        print(f"{name}: {len(data) - len(out)}/{len(data)} within {tol:g}; worst |diff| {max(abs(r[4]) for r in data):.5g}")
        for n, s, got, printed, diff in out:
            print(f"   n={n} s={s}: computed {got:.6f}, printed {printed:g}, diff {diff:+.5f}")
        if args.csv:
            args.csv.mkdir(parents=True, exist_ok=True)
            with open(args.csv / f"{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["n", "s", "computed", "printed", "diff"])
                w.writerows(data)


if __name__ == "__main__":
    main()
