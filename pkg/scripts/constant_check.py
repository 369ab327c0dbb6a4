"""Recover the amplitude that makes the Yamabe profile an exact solution.

For u = (c / K)^(d/4) with d = m + 2(k-1), L(u) / (-u^q) is constant in space
and proportional to c^(-1) times a fixed number; the exact amplitude is the c for
which the ratio equals 1.  The script fits it from sampled points and compares
it with (m + 2(k-1)) eps^2 and m (m + 2(k-1)) eps^2.
"""

import argparse

import numpy as np

from subfinsler.cli import norm_pair
from subfinsler.gauge import GaugePair, GrushinParams
from subfinsler.sampling import make_rng, sample_points
from subfinsler.solutions import AMP_D, YamabeSolutionSpec, yamabe_residual


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--pair", default="ellipsoid_pnorm4")
    ap.add_argument("--eps", type=float, default=0.7)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    rng = make_rng(args.seed)
    print(f"{'m':>3} {'k':>3} {'ratio':>12} {'fitted c':>14} {'(m+2k-2)e^2':>14} {'m(m+2k-2)e^2':>14}")
    for m, k in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2), (4, 3)]:
        g = GaugePair(*norm_pair(args.pair, m, k), GrushinParams(m, k))
        spec = YamabeSolutionSpec(g, args.eps, convention=AMP_D)
        x, _ = sample_points(g, args.samples, rng)
        rep = yamabe_residual(spec, x)
        ratio = rep.lhs / rep.rhs
        # u scales like c^(d/4) and the equation mixes powers 1 and q, so
        # the ratio scales like c^((1 - q) d / 4) = c^(-1)
        fitted = spec.amplitude * float(np.median(ratio))
        d = spec.dimension_shift
        print(f"{m:>3} {k:>3} {np.median(ratio):>12.9f} {fitted:>14.9f} {d * args.eps**2:>14.9f} {m * d * args.eps**2:>14.9f}")


if __name__ == "__main__":
    main()
