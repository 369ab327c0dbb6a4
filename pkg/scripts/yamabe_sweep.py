"""Residual sweep of the Yamabe family over dimensions, norm pairs, eps and sigma0.

Writes one CSV row per configuration with the autodiff and finite-difference
worst residuals and the median ratio L(u) / (-u^q).

    python3 scripts/yamabe_sweep.py --convention md --out sweep.csv
"""

import argparse
import csv
import sys

import numpy as np

from subfinsler.cli import norm_pair
from subfinsler.gauge import GaugePair, GrushinParams
from subfinsler.report import fmt
from subfinsler.sampling import make_rng, sample_points
from subfinsler.solutions import AMP_MD, AMP_D, YamabeSolutionSpec, yamabe_residual, yamabe_residual_fd


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--convention", choices=[AMP_D, AMP_MD], default=AMP_D)
    ap.add_argument("--pairs", nargs="+", default=["euclidean", "pnorm4_euclidean", "ellipsoid_pnorm4"])
    ap.add_argument("--dims", nargs="+", default=["2,1", "3,1", "2,2", "3,2"], help="m,k pairs")
    ap.add_argument("--eps", nargs="+", type=float, default=[0.5, 1.0, 2.0])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="-")
    args = ap.parse_args(argv)

    rng = make_rng(args.seed)
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["pair", "m", "k", "eps", "sigma0", "autodiff_max_rel", "fd_max_rel", "lhs_over_rhs", "excluded"])
    for pair in args.pairs:
        for mk in args.dims:
            m, k = (int(v) for v in mk.split(","))
            g = GaugePair(*norm_pair(pair, m, k), GrushinParams(m, k))
            for eps in args.eps:
                for s0 in (np.zeros(k), rng.uniform(-1, 1, k)):
                    spec = YamabeSolutionSpec(g, eps, s0, args.convention)
                    x, exc = sample_points(g, args.samples, rng, sigma0=s0)
                    ad = yamabe_residual(spec, x, excluded=exc)
                    fd = yamabe_residual_fd(spec, x, excluded=exc)
                    w.writerow([pair, m, k, eps, " ".join(fmt(v) for v in s0), fmt(ad.max_rel), fmt(fd.max_rel),
                                fmt(ad.notes["lhs_over_rhs"]), exc])
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
