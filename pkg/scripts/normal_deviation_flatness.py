"""t p_hat / delta at x = x_t c(t) over a t grid against the stable passage density.

Builds (or loads) the meander table, evaluates the passage density by
quadrature and prints one row per t plus the flatness z-score.
"""

import argparse
import os

import numpy as np

from levypassage import asymptotics as A
from levypassage.levy_models import get_model
from levypassage.stable_core import MeanderTable, estimate_meander_densities


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="cauchy")
    ap.add_argument("--x-t", type=float, default=1.0)
    ap.add_argument("--t", type=float, nargs="+", default=[10.0, 20.0, 40.0])
    ap.add_argument("--n-paths", type=int, default=1_000_000)
    ap.add_argument("--table", help="meander CSV to load (built and saved when missing)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="normal_deviation.csv")
    args = ap.parse_args()
    m = get_model(args.model)
    p = m.limit
    table = None
    if p.alpha < 2.0 and p.alpha * p.rho_bar < 1.0:
        if args.table and os.path.exists(args.table):
            table = MeanderTable.from_csv(args.table, p)
        else:
            table = estimate_meander_densities(p, n_steps=1024, n_paths=1_000_000,
                                               rng=np.random.default_rng(args.seed))
            if args.table:
                table.to_csv(args.table)
    reps = A.t2_normal_deviation_check(m, args.x_t, args.t, n_paths=args.n_paths, seed=args.seed,
                                       table=table, workers=args.workers)
    reps.append(A.flatness_report(reps))
    A.write_reports(reps, args.out)
    for r in reps:
        print(f"{r.check_id:<10} t={r.t:<6g} stat={r.statistic:.5f} target={r.target:.5f} "
              f"ci={r.ci:.5f} {'pass' if r.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
