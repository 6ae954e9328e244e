"""See-saw maxima of B, I4 and I5 with their noise resistances."""
import argparse

from bellstruct.bellpoly import known_inequality, noise_resistance
from bellstruct.optim import OptimizationConfig, seesaw_max

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--restarts", type=int, default=10)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

for name in ("B", "I4", "I5"):
    poly, bound = known_inequality(name)
    rep = seesaw_max(poly, OptimizationConfig(restarts=args.restarts, rng_seed=args.seed))
    print(f"{name:3s} N={poly.n_parties} bound={bound} max={rep.value:.4f} w={noise_resistance(bound, rep.value):.4f}")
