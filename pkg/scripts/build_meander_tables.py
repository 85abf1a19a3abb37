"""Estimate and save meander endpoint tables for the stable registry laws."""

import argparse
import os

import numpy as np

from levypassage.levy_models import REGISTRY
from levypassage.stable_core import estimate_meander_densities


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--models", nargs="+", default=["cauchy", "stable_neg", "stable_two_sided"])
    ap.add_argument("--n-paths", type=int, default=1_000_000)
    ap.add_argument("--n-steps", type=int, default=1024)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="tables")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for i, name in enumerate(args.models):
        m = REGISTRY[name]
        t = estimate_meander_densities(m.limit, n_steps=args.n_steps, n_paths=args.n_paths,
                                       rng=np.random.default_rng([args.seed, i]))
        path = os.path.join(args.out, f"meander_{name}.csv")
        t.to_csv(path)
        extra = ""
        if m.limit.alpha * m.limit.rho_bar < 1.0 and m.has_negative_jumps:
            extra = f"  k* E Z^-alpha = {m.k_star * t.negative_moment():.4f}"
        print(f"{path}: mass g={t.mass('g'):.4f}{extra}")


if __name__ == "__main__":
    main()
