"""Excitation profiles of the single pulse and the U3/U5 variants on the default grid.

Writes one CSV per sequence and prints the 0.95-level area of each.

    python3 scripts/profile_maps.py --out profiles/
"""

import argparse
from pathlib import Path

from unicp import scanner
from unicp.sequences import catalog_lookup, from_degrees

VARIANTS = [("single", None), ("U3", 90), ("U3", 0), ("U3", 45), ("U3", 135),
            ("U5", 150), ("U5", 330), ("U5", 60), ("U5", 180)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--out", type=Path, default=Path("profiles"), help="output directory")
    ap.add_argument("--rabi-khz", type=float, default=50.0, help="Omega/2pi [kHz]")
    ap.add_argument("--workers", type=int, default=1, help="process pool size [count]")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    grid = scanner.default_grid(args.rabi_khz * 1e3)
    for name, deg in VARIANTS:
        seq = catalog_lookup(name, None if deg is None else from_degrees(deg))
        prof = scanner.scan_profile(seq, grid, workers=args.workers)
        stem = name if deg is None else f"{name}_{deg}"
        prof.to_csv(args.out / f"{stem}.csv")
        print(f"{seq.name:>10}  area(0.95)={scanner.high_fidelity_area(prof, 0.95):.4f}")


if __name__ == "__main__":
    main()
