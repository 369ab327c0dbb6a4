"""Command-line verification harness.

Subcommands::

    check-identities     norm identities, radial Finsler Laplacians, chain rules
    verify-yamabe        the explicit Yamabe-type solutions and their lemma chain
    verify-fundamental   fundamental solutions for a list of (alpha, p)
    wulff                Wulff-shape and gauge-slice polylines
    energy               energy, L^q norm and Sobolev quotient by quadrature

Every run writes one CSV per suite, a deterministic ``summary.json`` and a
``header.json`` carrying the timestamp.  Exit status: 0 when every suite
passes, 1 when some suite fails, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import optimize

from . import energy as en
from . import jets
from . import norms as nm
from . import solutions as sol
from .errors import BudgetExceeded, ConfigError, DimensionMismatch, SubfinslerError
from .gauge import GaugePair, GrushinParams, theta_dual_closed, theta_dual_field
from .jets import ScalarField
from .operators import OperatorContext, _grushin_from_jet, _p_operator_from_jet, chain_rule_check, radial_laplacian_check
from .report import ResidualReport, fmt
from .sampling import RNG_ALGORITHM, degenerate_rejector, make_rng, sample_points

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

NORM_NAMES = ("euclidean", "pnorm4", "ellipsoid")

DEFAULT_TOLERANCES = {
    "finabla": 1e-9,
    "bp": 1e-9,
    "euler": 1e-12,
    "cauchy_schwarz": 1e-12,
    "radial": 1e-8,
    "chain_rule": 1e-10,
    "yamabe": 1e-7,
    "yamabe_fd": 1e-4,
    "lemma": 1e-8,
    "fundamental": 1e-7,
    "p2_reduction": 1e-12,
    "wulff": 1e-9,
    "energy_refinement": 1e-2,
    "energy_drift": 1e-2,
}

WULFF_POINTS = 720


@dataclass
class RunConfig:
    norm_pair: str = "euclidean"
    m: int = 2
    k: int = 1
    alpha: float = 1.0
    p: float = 2.0
    epsilon: float = 1.0
    sigma0: list | str | None = None  # a list of k numbers, "random", or null for 0
    samples: int = 200
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    convention: str = sol.AMP_D
    fd_samples: int | None = None  # points for the finite-difference path (default: all)
    cases: list = field(default_factory=lambda: [[1, 2], [1, 3], [2, 2], [1, "Q"]])
    curve: str = "theta0"  # wulff: phi0, psi0 or theta0
    slice: list | None = None  # wulff theta0: two coordinate indices (default [0, m])
    function: str = "yamabe"  # energy: yamabe, bump or zero
    box_half_width: float = 20.0
    sigma_half_width: float | None = None
    points_per_axis: int = 16
    scheme: str = en.GAUSS_LEGENDRE
    grading: float | None = 0.5
    sigma_grading: float | None = 0.1
    dilations: list = field(default_factory=lambda: [0.5, 2.0])

    def __post_init__(self):
        for name in ("m", "k", "samples", "seed", "points_per_axis"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not isinstance(self.tolerances, dict):
            raise ConfigError("tolerances must be an object")
        for name, tol in self.tolerances.items():
            if name not in DEFAULT_TOLERANCES and name != "default":
                raise ConfigError(f"unknown tolerance {name!r}")
            if not isinstance(tol, (int, float)) or not tol > 0:
                raise ConfigError(f"tolerance {name!r} must be a positive number")
        if self.convention not in (sol.AMP_D, sol.AMP_MD):
            raise ConfigError(f"convention must be {sol.AMP_D!r} or {sol.AMP_MD!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def tolerance(self, name: str) -> float:
        if name in self.tolerances:
            return float(self.tolerances[name])
        return float(self.tolerances.get("default", DEFAULT_TOLERANCES[name]))

    def params(self) -> GrushinParams:
        try:
            return GrushinParams(self.m, self.k, float(self.alpha), float(self.p))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def gauge(self) -> GaugePair:
        return GaugePair(*norm_pair(self.norm_pair, self.m, self.k), self.params())

    def rng(self) -> np.random.Generator:
        return make_rng(self.seed)


def named_norm(name: str, n: int) -> nm.NormSpec:
    if name == "euclidean":
        return nm.euclidean(n)
    if name == "pnorm4":
        return nm.pnorm(n, 4)
    if name == "ellipsoid":
        return nm.ellipsoid(nm.default_ellipsoid_matrix(n))
    raise ConfigError(f"unknown norm {name!r}; expected one of {', '.join(NORM_NAMES)}")


def norm_pair(name: str, m: int, k: int) -> tuple[nm.NormSpec, nm.NormSpec]:
    """'<phi>_<psi>' with both parts from NORM_NAMES; a single name uses the same family on both blocks."""
    parts = name.split("_") if isinstance(name, str) else []
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ConfigError(f"norm pair must be '<norm>' or '<phi>_<psi>', got {name!r}")
    return named_norm(parts[0], m), named_norm(parts[1], k)


def _sigma0(cfg: RunConfig, rng) -> np.ndarray:
    if cfg.sigma0 is None:
        return np.zeros(cfg.k)
    if cfg.sigma0 == "random":
        return rng.uniform(-1.0, 1.0, cfg.k)
    try:
        s = np.asarray(cfg.sigma0, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError("sigma0 must be a list of numbers, 'random' or null") from exc
    if s.shape != (cfg.k,):
        raise ConfigError(f"sigma0 must have length k = {cfg.k}")
    return s


# --- suites ----------------------------------------------------------------------


def _norm_suites(cfg: RunConfig, label: str, M: nm.NormSpec, rng) -> list[ResidualReport]:
    x = nm.sample_nonsingular(M, cfg.samples, rng)
    res = nm.identity_residuals(M, x)
    dual = nm.dual_norm_closed(M)
    slack = nm.norm_eval(M, x)[:, None] * nm.norm_eval(dual, x)[None, :] - np.abs(x @ x.T)
    violation = np.maximum(0.0, -slack.min(axis=1))
    zero = np.zeros(len(x))
    out = []
    for key, tol in (
        ("finabla_dual", "finabla"),
        ("finabla_primal", "finabla"),
        ("bp_dual", "bp"),
        ("bp_primal", "bp"),
        ("euler", "euler"),
    ):
        out.append(ResidualReport.from_values(f"{key}_{label}", x, res[key], zero, cfg.tolerance(tol), scale=1.0))
    out.append(
        ResidualReport.from_values(f"cauchy_schwarz_{label}", x, violation, zero, cfg.tolerance("cauchy_schwarz"), scale=1.0)
    )
    return out


def radial_profiles(n: int) -> dict:
    """t^2, t^4, log t and the M0-radial fundamental profile t^-(n-2).

    For n < 3 the last one is constant or linear, so exp(-t) takes its place.
    """
    prof = {
        "square": lambda t: t * t,
        "quartic": lambda t: (t * t) * (t * t),
        "log": lambda t: jets.log(t),
    }
    if n >= 3:
        prof["fundamental"] = lambda t: jets.power(t, -(n - 2.0))
    else:
        prof["exp"] = lambda t: jets.exp(-t)
    return prof


def _radial_suites(cfg: RunConfig, label: str, M: nm.NormSpec, rng) -> list[ResidualReport]:
    profiles = radial_profiles(M.dimension)
    dual = nm.dual_norm_closed(M)
    margin = OperatorContext.singular_margin
    # keep points where every profile has a usable gradient k'(M0(x)) grad M0(x)
    kept, excluded = [], 0
    while len(kept) < cfg.samples:
        x = nm.sample_nonsingular(M, 1, rng)
        fields_ = [ScalarField(M.dimension, lambda y, k=k: k(dual(y)), dual.singular) for k in profiles.values()]
        if M.family != nm.EUCLIDEAN and any(np.linalg.norm(jets.jet2_eval(f, x).gradient) < margin for f in fields_):
            excluded += 1
            continue
        kept.append(x[0])
    x = np.array(kept)
    out = []
    for pname, prof in profiles.items():
        lhs, rhs = radial_laplacian_check(M, prof, x)
        out.append(
            ResidualReport.from_values(f"radial_{pname}_{label}", x, lhs, rhs, cfg.tolerance("radial"), excluded_count=excluded)
        )
    return out


CHAIN_FUNCTIONS = ("cube", "yamabe_power")


def _chain_function(name: str, p: GrushinParams):
    if name == "cube":
        return lambda t: t * t * t
    return lambda t: jets.power(t, -(p.m + 2 * p.k - 2.0))


def _chain_suites(cfg: RunConfig, g: GaugePair, rng) -> list[ResidualReport]:
    ctx = OperatorContext(g)
    # the dual gauge keeps both block gradients of order one on the sampling annulus
    u = theta_dual_field(g)
    funcs = {name: _chain_function(name, g.params) for name in CHAIN_FUNCTIONS}
    reject = degenerate_rejector(ctx, u, *(u.map(F) for F in funcs.values()))
    pts, excluded = sample_points(g, cfg.samples, rng, reject=reject)
    tol = cfg.tolerance("chain_rule")
    out = []
    for fname, F in funcs.items():
        r = chain_rule_check(ctx, u, F, pts)
        out.append(ResidualReport.from_values(f"chain_W_{fname}", pts, r["w_lhs"], r["w_rhs"], tol, excluded_count=excluded))
        out.append(ResidualReport.from_values(f"chain_L_{fname}", pts, r["l_lhs"], r["l_rhs"], tol, excluded_count=excluded))
    return out


def run_check_identities(cfg: RunConfig) -> list[ResidualReport]:
    g = cfg.gauge()
    rng = cfg.rng()
    reports = []
    for label, M in (("phi", g.phi), ("psi", g.psi)):
        reports += _norm_suites(cfg, label, M, rng)
        reports += _radial_suites(cfg, label, M, rng)
    reports += _chain_suites(cfg, g, rng)
    return reports


def run_verify_yamabe(cfg: RunConfig) -> list[ResidualReport]:
    g = cfg.gauge()
    rng = cfg.rng()
    s0 = _sigma0(cfg, rng)
    try:
        spec = sol.YamabeSolutionSpec(g, float(cfg.epsilon), s0, cfg.convention)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    pts, excluded = sample_points(g, cfg.samples, rng, sigma0=s0)
    base = sol.YamabeSolutionSpec(g, float(cfg.epsilon))
    lemma_pts, lemma_ex = sample_points(g, cfg.samples, rng)
    tol = cfg.tolerance("lemma")
    nfd = cfg.samples if cfg.fd_samples is None else min(cfg.fd_samples, cfg.samples)
    reports = [
        sol.yamabe_residual(spec, pts, cfg.tolerance("yamabe"), excluded),
        sol.yamabe_residual_fd(spec, pts[:nfd], cfg.tolerance("yamabe_fd"), excluded),
        sol.verify_lemma_yam3(base, lemma_pts, tol, lemma_ex),
        *sol.verify_lemma_yam2(base, lemma_pts, tol, lemma_ex).values(),
        sol.verify_magic(base, lemma_pts, tol, lemma_ex),
        sol.verify_intertwining(base, lemma_pts, tol, lemma_ex),
    ]
    return reports


def _case(cfg: RunConfig, case) -> GrushinParams:
    try:
        alpha, p = case
        alpha = float(alpha)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"fundamental case must be [alpha, p], got {case!r}") from exc
    try:
        base = GrushinParams(cfg.m, cfg.k, alpha)
        p = base.Q if p == "Q" else float(p)
        return GrushinParams(cfg.m, cfg.k, alpha, p)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad fundamental case {case!r}: {exc}") from exc


def run_verify_fundamental(cfg: RunConfig) -> list[ResidualReport]:
    phi, psi = norm_pair(cfg.norm_pair, cfg.m, cfg.k)
    if not isinstance(cfg.cases, list) or not cfg.cases:
        raise ConfigError("cases must be a non-empty list of [alpha, p]")
    cases = [_case(cfg, c) for c in cfg.cases]
    rng = cfg.rng()
    reports = []
    for params in cases:
        g = GaugePair(phi, psi, params)
        spec = sol.FundamentalSolutionSpec(g)
        reject = degenerate_rejector(OperatorContext(g), sol.fundamental_field(spec))
        pts, excluded = sample_points(g, cfg.samples, rng, annulus=(0.5, 2.0), reject=reject)
        reports.append(sol.fundamental_residual(spec, pts, cfg.tolerance("fundamental"), excluded))
        if params.p == 2:
            ctx = OperatorContext(g)
            j = jets.jet2_eval(sol.fundamental_field(spec), pts)
            two = _p_operator_from_jet(ctx, j, pts)
            lap = _grushin_from_jet(ctx, j, pts)
            reports.append(
                ResidualReport.from_values(
                    f"p2_reduction_a{params.alpha:g}", pts, two, lap, cfg.tolerance("p2_reduction"),
                    scale=np.maximum(np.abs(lap), 1e-300), excluded_count=excluded,
                )
            )
    return reports


def _radial_root(F, direction: np.ndarray) -> float:
    """r > 0 with F(r direction) = 1 for an increasing radial profile F."""
    hi = 1.0
    while F(hi * direction) < 1:
        hi *= 2
    lo = hi / 2
    while F(lo * direction) > 1:
        lo /= 2
    return optimize.brentq(lambda r: F(r * direction) - 1.0, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def run_wulff(cfg: RunConfig) -> list[ResidualReport]:
    g = cfg.gauge()
    p = g.params
    if cfg.curve == "phi0":
        if p.m != 2:
            raise ConfigError("the phi0 Wulff shape needs m = 2")
        M = g.phi_dual
        F = lambda x: nm.norm_eval(M, x)  # noqa: E731
        dim = 2
        embed = lambda v: v  # noqa: E731
    elif cfg.curve == "psi0":
        if p.k != 2:
            raise ConfigError("the psi0 Wulff shape needs k = 2")
        M = g.psi_dual
        F = lambda x: nm.norm_eval(M, x)  # noqa: E731
        dim = 2
        embed = lambda v: v  # noqa: E731
    elif cfg.curve == "theta0":
        sl = [0, p.m] if cfg.slice is None else cfg.slice
        if not isinstance(sl, list) or len(sl) != 2 or len(set(sl)) != 2:
            raise ConfigError("theta0 slice must list exactly two distinct coordinate indices")
        if not all(isinstance(i, int) and 0 <= i < p.N for i in sl):
            raise ConfigError(f"slice indices must lie in [0, {p.N})")
        dim = p.N

        def embed(v, sl=sl):
            x = np.zeros(p.N)
            x[sl] = v
            return x

        F = lambda x: theta_dual_closed(g, x)  # noqa: E731
    else:
        raise ConfigError(f"unknown wulff curve {cfg.curve!r}")
    angles = 2 * np.pi * np.arange(WULFF_POINTS) / WULFF_POINTS
    pts = []
    for a in angles:
        d = embed(np.array([np.cos(a), np.sin(a)]))
        pts.append(_radial_root(F, d) * d)
    pts.append(pts[0])  # closing row
    pts = np.array(pts)
    vals = np.array([F(x) for x in pts])
    name = f"wulff_{cfg.curve}"
    coords = pts if dim == 2 else pts[:, cfg.slice or [0, p.m]]
    return [ResidualReport.from_values(name, coords, vals, np.ones(len(vals)), cfg.tolerance("wulff"), scale=1.0)]


def _energy_field(cfg: RunConfig, g: GaugePair) -> ScalarField:
    if cfg.function == "yamabe":
        try:
            spec = sol.YamabeSolutionSpec(g, float(cfg.epsilon), _sigma0(cfg, cfg.rng()))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return sol.yamabe_field(spec)
    if cfg.function == "bump":
        return en.bump_field(g.params.N, radius=1.0)
    if cfg.function == "zero":
        return en.zero_field(g.params.N)
    raise ConfigError(f"unknown energy function {cfg.function!r}")


def run_energy(cfg: RunConfig) -> tuple[list[ResidualReport], dict]:
    g = cfg.gauge()
    ctx = OperatorContext(g)
    u = _energy_field(cfg, g)
    try:
        quad = en.QuadratureSpec(
            float(cfg.box_half_width), cfg.points_per_axis, cfg.scheme,
            cfg.sigma_half_width, cfg.grading, cfg.sigma_grading,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    e_res = en.energy_result(ctx, u, quad)
    values = {"energy": fmt(e_res.value), "nodes": e_res.nodes, "excluded": e_res.excluded,
              "exclusion_margin": fmt(e_res.margin)}
    reports = []
    if e_res.value == 0:
        values["note"] = "zero energy: quotient and ratios undefined"
        return reports, values
    none = np.zeros((1, 0))
    refined = en.energy(ctx, u, quad.refined())
    reports.append(ResidualReport.from_values(
        "energy_refinement", none, [refined], [e_res.value], cfg.tolerance("energy_refinement"), scale=abs(e_res.value)))
    if g.params.p < g.params.Q:
        q = en.critical_exponent(g.params)
        lq = en.lq_norm(u, q, quad, g.params)
        quo = en.sobolev_quotient(ctx, u, quad)
        quo_ref = en.sobolev_quotient(ctx, u, quad.refined())
        values.update({"q": fmt(q), "lq_norm": fmt(lq), "quotient": fmt(quo), "quotient_refined": fmt(quo_ref)})
        reports.append(ResidualReport.from_values(
            "quotient_refinement", none, [quo_ref], [quo], cfg.tolerance("energy_refinement"), scale=quo))
        if cfg.function == "yamabe":
            # u ~ Theta0^-d with d = m + 2(k-1): the energy tail decays like R^-d and the
            # L^q integral tail like R^-2 (the integrand is Theta0^-(Q+2))
            d = g.params.yamabe_dimension
            e_tail = en.truncation_tail(lambda qq: en.energy(ctx, u, qq), quad, g.params, d)
            lq_tail = en.truncation_tail(lambda qq: en.lq_norm(u, q, qq, g.params) ** q, quad, g.params, 2.0)
            values["energy_tail_rel"] = fmt(e_tail / e_res.value)
            values["lq_tail_rel"] = fmt(lq_tail / lq**q)
        for t in cfg.dilations:
            d = en.quotient_dilation_drift(ctx, u, quad, float(t))
            reports.append(ResidualReport.from_values(
                f"quotient_drift_t{float(t):g}", none, [d.dilated], [d.base], cfg.tolerance("energy_drift"), scale=d.base))
    return reports, values


COMMANDS = {
    "check-identities": run_check_identities,
    "verify-yamabe": run_verify_yamabe,
    "verify-fundamental": run_verify_fundamental,
    "wulff": run_wulff,
    "energy": run_energy,
}


# --- output ----------------------------------------------------------------------


def write_reports(out: Path, command: str, cfg: RunConfig, reports: list[ResidualReport], extra: dict | None = None):
    out.mkdir(parents=True, exist_ok=True)
    for r in reports:
        with open(out / f"{r.suite}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(r.csv_header())
            w.writerows(r.csv_rows())
    summary = {
        "command": command,
        "config": asdict(cfg),
        "rng": RNG_ALGORITHM,
        "suites": [r.summary() for r in reports],
        "pass": all(r.passed for r in reports),
    }
    if extra:
        summary["values"] = extra
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    header = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "command": command,
        "rng": RNG_ALGORITHM,
    }
    (out / "header.json").write_text(json.dumps(header, indent=2) + "\n")
    return summary


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subfinsler", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", default=f"reports/{name}", help="output directory")
        sp.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides the config)")
        sp.add_argument("--samples", type=int, help="sample count (overrides the config)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        cfg = load_config(args.config, {"seed": args.seed, "samples": args.samples})
        result = COMMANDS[args.command](cfg)
    except (ConfigError, BudgetExceeded, DimensionMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SubfinslerError as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    reports, extra = result if isinstance(result, tuple) else (result, None)
    summary = write_reports(Path(args.out), args.command, cfg, reports, extra)
    for r in reports:
        print(r)
    if extra:
        for key, val in extra.items():
            print(f"{key} = {val}")
    return EXIT_PASS if summary["pass"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
