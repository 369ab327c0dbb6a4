"""Tensor-grid quadrature of the energy, L^q norms and the Sobolev quotient.

Integrals over R^N are truncated to a box ``[-L, L]^m x [-L_s, L_s]^k``.
Each axis can be graded by the map ``x = c sinh(s)`` with ``s`` uniform, which
concentrates nodes near the origin where the explicit solutions vary on the
unit scale while still reaching far into their algebraic tails.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import jets
from .errors import BudgetExceeded
from .gauge import GrushinParams, dilate
from .jets import ScalarField, evaluate, jet2_eval
from .norms import PNORM
from .operators import OperatorContext, _energy_density, _fd_gradient, _square, _weight_value

MIDPOINT = "midpoint"
GAUSS_LEGENDRE = "gauss-legendre"

MAX_DIMENSION = 5
CHUNK = 200_000


@dataclass(frozen=True)
class QuadratureSpec:
    box_half_width: float
    points_per_axis: int = 16
    scheme: str = GAUSS_LEGENDRE
    sigma_half_width: float | None = None
    grading: float | None = None  # sinh grading scale c; None for a uniform grid
    sigma_grading: float | None = None  # grading scale on the sigma axes (defaults to ``grading``)
    budget: int = 10_000_000
    exclusion_margin: float = 1e-3

    def __post_init__(self):
        if not self.box_half_width > 0:
            raise ValueError("box_half_width must be positive")
        if self.sigma_half_width is not None and not self.sigma_half_width > 0:
            raise ValueError("sigma_half_width must be positive")
        if self.points_per_axis < 8:
            raise ValueError("points_per_axis must be at least 8")
        if self.scheme not in (MIDPOINT, GAUSS_LEGENDRE):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        for c in (self.grading, self.sigma_grading):
            if c is not None and not c > 0:
                raise ValueError("grading scales must be positive")

    @property
    def sigma_width(self) -> float:
        return self.box_half_width if self.sigma_half_width is None else self.sigma_half_width

    @property
    def sigma_scale(self) -> float | None:
        return self.grading if self.sigma_grading is None else self.sigma_grading

    def refined(self, factor: int = 2) -> "QuadratureSpec":
        return replace(self, points_per_axis=self.points_per_axis * factor)

    def dilated(self, params: GrushinParams, t: float) -> "QuadratureSpec":
        """The box delta_t(box); the grading scale is kept, so the nodes are not simply dilated."""
        return replace(
            self,
            box_half_width=t * self.box_half_width,
            sigma_half_width=t ** (params.alpha + 1) * self.sigma_width,
        )

    def volume(self, params: GrushinParams) -> float:
        return (2 * self.box_half_width) ** params.m * (2 * self.sigma_width) ** params.k


def axis_rule(n: int, half_width: float, scheme: str, grading: float | None):
    """Nodes and weights of a 1-D rule on [-half_width, half_width]."""
    if scheme == GAUSS_LEGENDRE:
        s, w = np.polynomial.legendre.leggauss(n)
    else:
        s = -1 + (2 * np.arange(n) + 1) / n
        w = np.full(n, 2.0 / n)
    if grading is None:
        return half_width * s, half_width * w
    c = grading
    S = np.arcsinh(half_width / c)
    return c * np.sinh(S * s), c * S * np.cosh(S * s) * w


def _rules(params: GrushinParams, quad: QuadratureSpec):
    N = params.N
    if N > MAX_DIMENSION:
        raise BudgetExceeded(f"quadrature limited to m + k <= {MAX_DIMENSION}, got {N}")
    total = quad.points_per_axis**N
    if total > quad.budget:
        raise BudgetExceeded(f"{total} quadrature nodes exceed the budget {quad.budget}")
    n = quad.points_per_axis
    z = axis_rule(n, quad.box_half_width, quad.scheme, quad.grading)
    s = axis_rule(n, quad.sigma_width, quad.scheme, quad.sigma_scale)
    return [z] * params.m + [s] * params.k


def _chunks(rules):
    sizes = [len(r[0]) for r in rules]
    total = int(np.prod(sizes))
    for start in range(0, total, CHUNK):
        idx = np.unravel_index(np.arange(start, min(total, start + CHUNK)), sizes)
        pts = np.stack([r[0][i] for r, i in zip(rules, idx)], axis=-1)
        wts = np.prod(np.stack([r[1][i] for r, i in zip(rules, idx)], axis=-1), axis=-1)
        yield pts, wts


def _near_hyperplanes(ctx: OperatorContext, pts, margin: float) -> np.ndarray:
    g = ctx.gauge
    m = g.params.m
    mask = np.zeros(pts.shape[:-1], dtype=bool)
    if PNORM in (g.phi.family, g.phi_dual.family):
        mask |= np.any(np.abs(pts[..., :m]) < margin, axis=-1)
    if PNORM in (g.psi.family, g.psi_dual.family):
        mask |= np.any(np.abs(pts[..., m:]) < margin, axis=-1)
    return mask


@dataclass
class QuadratureResult:
    value: float
    nodes: int
    excluded: int
    margin: float


def integrate(params: GrushinParams, integrand, quad: QuadratureSpec, exclude=None) -> QuadratureResult:
    """Sum ``integrand(points)`` against the tensor rule; excluded nodes contribute 0."""
    total = 0.0
    nodes = excluded = 0
    for pts, wts in _chunks(_rules(params, quad)):
        nodes += len(pts)
        if exclude is not None:
            bad = exclude(pts)
            excluded += int(bad.sum())
            pts, wts = pts[~bad], wts[~bad]
            if not len(pts):
                continue
        total += float(np.sum(integrand(pts) * wts))
    return QuadratureResult(total, nodes, excluded, quad.exclusion_margin)


def _excluder(ctx: OperatorContext, u: ScalarField, margin: float):
    return lambda pts: u.singular(pts) | _near_hyperplanes(ctx, pts, margin)


def energy_result(ctx: OperatorContext, u: ScalarField, quad: QuadratureSpec) -> QuadratureResult:
    p = ctx.params.p

    def f(pts):
        W = _energy_density(ctx, jet2_eval(u, pts), pts)
        return W ** (p / 2) / p

    return integrate(ctx.params, f, quad, _excluder(ctx, u, quad.exclusion_margin))


def energy(ctx: OperatorContext, u: ScalarField, quad: QuadratureSpec) -> float:
    """(1/p) int W(u)^(p/2) over the box."""
    return energy_result(ctx, u, quad).value


def energy_fd(ctx: OperatorContext, u: ScalarField, quad: QuadratureSpec, h: float = 1e-5) -> float:
    """The same energy with central-difference gradients; an independent oracle."""
    g = ctx.gauge
    m, p = g.params.m, g.params.p

    def f(pts):
        grad = _fd_gradient(u, pts, np.full(len(pts), h))
        W = _square(g.phi, grad[:, :m]) + _weight_value(g, pts) * _square(g.psi, grad[:, m:])
        return W ** (p / 2) / p

    return integrate(ctx.params, f, quad, _excluder(ctx, u, quad.exclusion_margin)).value


def lq_norm(u: ScalarField, q_exp: float, quad: QuadratureSpec, params: GrushinParams) -> float:
    """(int |u|^q)^(1/q) over the box."""
    if not q_exp > 0:
        raise ValueError("q_exp must be positive")
    res = integrate(params, lambda pts: np.abs(evaluate(u, pts)) ** q_exp, quad, u.singular)
    return res.value ** (1.0 / q_exp)


def critical_exponent(params: GrushinParams) -> float:
    """q with 1/p - 1/q = 1/Q."""
    p, Q = params.p, params.Q
    if not p < Q:
        raise ValueError("the Sobolev exponent needs p < Q")
    return p * Q / (Q - p)


def sobolev_quotient(ctx: OperatorContext, u: ScalarField, quad: QuadratureSpec) -> float:
    """||u||_q / (p E(u))^(1/p) with the critical q; invariant under u -> c u and u -> u o delta_t."""
    p = ctx.params.p
    q = critical_exponent(ctx.params)
    e = energy(ctx, u, quad)
    return lq_norm(u, q, quad, ctx.params) / (p * e) ** (1.0 / p)


def dilated_field(params: GrushinParams, u: ScalarField, t: float) -> ScalarField:
    """u o delta_t."""
    m = params.m
    ts = t ** (params.alpha + 1)

    def transform(x):
        return [t * xi for xi in x[:m]] + [ts * xi for xi in x[m:]]

    return u.precompose(transform, singular=lambda pts: u.singular(dilate(params, t, pts)))


@dataclass
class DilationDrift:
    t: float
    base: float
    dilated: float

    @property
    def drift(self) -> float:
        return abs(self.dilated / self.base - 1.0)


def quotient_dilation_drift(ctx: OperatorContext, u: ScalarField, quad: QuadratureSpec, t: float) -> DilationDrift:
    """Quotient of u on the box against the quotient of u o delta_t on delta_(1/t)(box)."""
    base = sobolev_quotient(ctx, u, quad)
    dil = sobolev_quotient(ctx, dilated_field(ctx.params, u, t), quad.dilated(ctx.params, 1.0 / t))
    return DilationDrift(t, base, dil)


def measure_scaling(params: GrushinParams, quad: QuadratureSpec, t: float, profile=None) -> tuple[float, float]:
    """(numerical ratio, t^Q) for int g(Theta0(delta_(1/t) x)) dx / int g(Theta0(x)) dx.

    ``profile`` is a rapidly decaying function of the Euclidean-pair gauge
    value (default ``exp(-r^4)``); the box must contain its essential support
    at both scales.
    """
    from .gauge import r_alpha

    profile = profile or (lambda r: np.exp(-(r**4)))
    m = params.m

    def f_at(scale):
        return lambda pts: profile(r_alpha(m, params.alpha, dilate(params, 1.0 / scale, pts)))

    base = integrate(params, f_at(1.0), quad).value
    scaled = integrate(params, f_at(t), quad).value
    return scaled / base, t**params.Q


def refinement_ratio(compute, quad: QuadratureSpec, factor: int = 2) -> float:
    """compute(refined quad) / compute(quad); tends to 1 as the rule converges."""
    return compute(quad.refined(factor)) / compute(quad)


def truncation_tail(compute, quad: QuadratureSpec, params: GrushinParams, decay: float) -> float:
    """Tail beyond the box for an integral whose truncation error behaves like R^(-decay).

    Compares the box with delta_(1/2)(box): if I(inf) - I(R) = c R^(-decay),
    then I(R) - I(R/2) = c R^(-decay) (2^decay - 1).
    """
    full = compute(quad)
    half = compute(quad.dilated(params, 0.5))
    return (full - half) / (2.0**decay - 1.0)


def bump_field(dimension: int, radius: float = 1.0, center=None) -> ScalarField:
    """exp(-1 / (1 - |x - c|^2 / R^2)) inside the ball, 0 outside; smooth and compactly supported."""
    c = np.zeros(dimension) if center is None else np.asarray(center, dtype=float)

    def ev(x):
        r2 = sum((xi - ci) * (xi - ci) for xi, ci in zip(x, c))
        s = 1.0 - r2 / radius**2
        inside = jets.value_of(s) > 0
        safe = jets.where(inside, s, 1.0)
        return jets.where(inside, jets.exp(-1.0 / safe), 0.0)

    return ScalarField(dimension, ev, name="bump")


def zero_field(dimension: int) -> ScalarField:
    return ScalarField(dimension, lambda x: 0.0 * x[0], name="zero")
