"""Export Wulff shapes {Phi0 = 1} and gauge slices {Theta0 = 1} as CSV polylines.

Runs the ``wulff`` subcommand for a few norm pairs into OUT/<name>/.
"""

import argparse
from pathlib import Path

from subfinsler.cli import RunConfig, run_wulff, write_reports

SHAPES = {
    "circle": dict(curve="phi0", m=2),
    "pnorm4_dual_ball": dict(curve="phi0", m=2, norm_pair="pnorm4_euclidean"),
    "ellipse": dict(curve="phi0", m=2, norm_pair="ellipsoid"),
    "theta0_euclidean": dict(curve="theta0", m=1, k=1),
    "theta0_alpha2": dict(curve="theta0", m=1, k=1, alpha=2.0),
    "psi0_pnorm4": dict(curve="psi0", m=1, k=2, norm_pair="euclidean_pnorm4"),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", default="reports/wulff_shapes")
    args = ap.parse_args(argv)
    for name, cfg in SHAPES.items():
        rc = RunConfig(**cfg)
        reports = run_wulff(rc)
        summary = write_reports(Path(args.out) / name, "wulff", rc, reports)
        print(f"{name:<20} max |F - 1| = {summary['suites'][0]['max_rel']}")


if __name__ == "__main__":
    main()
