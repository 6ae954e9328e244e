"""Noise resistance of B_N on W_N for the Table 1 party counts, as CSV."""
import argparse
import csv
import sys
import time

from bellstruct.optim import OptimizationConfig, table1
from bellstruct.verify import TABLE1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=list(TABLE1))
    ap.add_argument("--restarts", type=int, default=OptimizationConfig.restarts)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    t0 = time.perf_counter()
    rows = table1(tuple(args.n), OptimizationConfig(restarts=args.restarts, rng_seed=args.seed))
    out = csv.writer(sys.stdout)
    out.writerow(["N", "bound", "Q", "w", "w_reference", "theta0", "theta1"])
    for r in rows:
        out.writerow([r.n, r.bound, f"{r.q:.6f}", f"{r.w:.4f}", TABLE1.get(r.n, ""), f"{r.theta0:.6f}", f"{r.theta1:.6f}"])
    print(f"# {time.perf_counter() - t0:.1f}s", file=sys.stderr)


if __name__ == "__main__":
    main()
