"""Share of continuously classified crossings for a two-sided stable law.

Sweeps the step size at the default cutoff and the cutoff at fixed step size,
and prints the shares with binomial CIs.  The share falls slowly (roughly as
the cutoff to the power alpha*rho + 1 - alpha) because paths that jump below 0
from very close to it are absorbed by the Gaussian surrogate.
"""

import argparse

import numpy as np

from levypassage import passage_sim as ps
from levypassage.levy_models import two_sided_stable


def share(m, dt, kappa, n, seed):
    b = ps.simulate_passages(m, 1.0, 1.0, dt, n, seed, kappa=kappa)
    crossed = ~b.censored
    c = int(np.sum(b.code[crossed] == ps._kernels.CONTINUOUS))
    return c / crossed.sum(), ps.binomial_ci(c, int(crossed.sum()))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--beta", type=float, default=0.0)
    ap.add_argument("--n-paths", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    m = two_sided_stable(args.alpha, args.beta)
    print("dt        kappa   share    ci")
    for i, dt in enumerate((1e-3, 5e-4, 2.5e-4)):
        s, ci = share(m, dt, None, args.n_paths, args.seed + i)
        print(f"{dt:<9g} 0.25    {s:.4f}  {ci:.4f}")
    for i, kappa in enumerate((0.25, 0.05, 0.01)):
        s, ci = share(m, 1e-2, kappa, args.n_paths, args.seed + 10 + i)
        print(f"{1e-2:<9g} {kappa:<7g} {s:.4f}  {ci:.4f}")


if __name__ == "__main__":
    main()
