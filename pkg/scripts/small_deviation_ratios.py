"""Small-deviation ratios p_hat(x1)/p_hat(x2) against U*(x1)/U*(x2) over a t grid."""

import argparse

import numpy as np

from levypassage import asymptotics as A
from levypassage.levy_models import ModelKind, estimate_ladder_data, get_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="stable_neg")
    ap.add_argument("--x", type=float, nargs=2, default=None)
    ap.add_argument("--t", type=float, nargs="+", default=None)
    ap.add_argument("--n-paths", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="small_deviation.csv")
    args = ap.parse_args()
    m = get_model(args.model)
    ladder = None
    if m.kind is ModelKind.BROWNIAN_PLUS_NEG_CP:
        x = args.x or (0.5, 0.25)
        t = args.t or (10.0, 20.0, 40.0)
        ladder = estimate_ladder_data(m, rng=np.random.default_rng(args.seed))
        dt = min(t) / 200.0
    else:
        x = args.x or (0.1, 0.05)
        t = args.t or (1.0, 2.0, 4.0)
        dt = None
    reps = A.t2_small_deviation_check(m, x[0], x[1], t, n_paths=args.n_paths, seed=args.seed,
                                      ladder=ladder, dt=dt, workers=args.workers)
    A.write_reports(reps, args.out)
    for r in reps:
        print(f"{r.check_id:<10} t={r.t:<6g} stat={r.statistic:.4f} target={r.target:.4f} "
              f"ci={r.ci:.4f} {'pass' if r.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
