"""Infidelity of U3(45°) and U3(135°) along correlated Rabi/detuning error lines.

    python3 scripts/correlated_errors.py --kappa -0.5 0.5
"""

import argparse

import numpy as np

from unicp import dynamics, scanner
from unicp.sequences import catalog_lookup, from_degrees


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--kappa", type=float, nargs="+", default=[-0.5, 0.5],
                    help="correlation slopes [dimensionless]")
    ap.add_argument("--phi2-deg", type=float, nargs="+", default=[45, 135, 90, 0],
                    help="U3 variants [deg]")
    args = ap.parse_args()
    base = dynamics.PulseSpec(2 * np.pi * 50e3, 10e-6)
    for kappa in args.kappa:
        path = scanner.CorrelationPath(kappa, (-0.2, 0.2), 9)
        print(f"kappa={kappa:+g}   e: " + " ".join(f"{e:+.2f}" for e in path.errors))
        for deg in args.phi2_deg:
            seq = catalog_lookup("U3", from_degrees(deg))
            row = scanner.scan_correlated(seq, path, base)
            print(f"  {seq.name:>10} 1-P: " + " ".join(f"{1 - p:.3f}" for _, p in row))


if __name__ == "__main__":
    main()
