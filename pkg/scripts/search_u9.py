"""Nine-pulse universal sets nullifying orders up to j0 = 2.

No nine-pulse set is tabulated, so whatever this finds is engine output only.
Each candidate is re-checked with the series verifier.

    python3 scripts/search_u9.py --restarts 64 --workers 8
"""

import argparse

from unicp.series import search_phases, verify_universal


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--restarts", type=int, default=64, help="Sobol starts [count]")
    ap.add_argument("--seed", type=int, default=0, help="Sobol seed [integer]")
    ap.add_argument("--workers", type=int, default=1, help="process pool size [count]")
    ap.add_argument("--j0", type=int, default=2, help="orders to nullify [count]")
    args = ap.parse_args()
    res = search_phases(9, args.j0, anagram=True, restarts=args.restarts, rng_seed=args.seed,
                        workers=args.workers)
    print(f"best residual {res.best_residual:.2e}, {len(res.candidates)} distinct candidates")
    for c in res.candidates:
        ok = verify_universal(c.big_phi, args.j0).passed
        print(f"{c.residual:.1e}  {c.label()}  |c_{args.j0 + 1}|max={c.leading_magnitude:.4f}  "
              f"verified={'yes' if ok else 'no'}")


if __name__ == "__main__":
    main()
