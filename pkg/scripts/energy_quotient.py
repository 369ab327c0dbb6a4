"""Sobolev quotient of the Yamabe profile under dilations and grid refinement.

Prints the quotient on the base box and the quotient of u o delta_t on
delta_(1/t)(box) for several t and grid sizes; the spread across t is pure
quadrature error when the normalization exponent is right.
"""

import argparse

from subfinsler.energy import QuadratureSpec, quotient_dilation_drift
from subfinsler.gauge import euclidean_pair
from subfinsler.operators import OperatorContext
from subfinsler.solutions import YamabeSolutionSpec, yamabe_field


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--eps", type=float, default=1.0)
    ap.add_argument("--box", type=float, default=20.0)
    ap.add_argument("--grid", type=int, nargs="+", default=[12, 16, 24])
    ap.add_argument("--t", type=float, nargs="+", default=[0.5, 2.0, 4.0])
    args = ap.parse_args(argv)
    g = euclidean_pair(args.m, args.k)
    ctx = OperatorContext(g)
    u = yamabe_field(YamabeSolutionSpec(g, args.eps))
    print(f"{'n':>4} {'t':>6} {'base':>12} {'dilated':>12} {'drift':>10}")
    for n in args.grid:
        quad = QuadratureSpec(args.box, n, grading=0.5, sigma_grading=0.1)
        for t in args.t:
            d = quotient_dilation_drift(ctx, u, quad, t)
            print(f"{n:>4} {t:>6g} {d.base:>12.8f} {d.dilated:>12.8f} {d.drift:>10.2e}")


if __name__ == "__main__":
    main()
