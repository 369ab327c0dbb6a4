"""Explicit solutions and the identity checks leading up to them.

For ``alpha = 1`` the building block is

    K(z, sigma) = (eps^2 + Phi0(z)^2)^2 + 16 Psi0(sigma)^2,

with ``rho = K^(1/4)``; the Yamabe-type solutions are negative powers of the
shifted ``K``.  The fundamental solutions are powers (or the logarithm) of the
dual gauge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import jets
from .errors import PolePoint
from .gauge import GaugePair, theta_dual_closed, theta_dual_field
from .jets import ScalarField, evaluate, jet2_eval
from .operators import (
    OperatorContext,
    _energy_density,
    _grushin_from_jet,
    _p_operator_from_jet,
    block_laplacians,
    natural_scale,
)
from .report import ResidualReport

AMP_D = "d"
AMP_MD = "md"

BRANCH_TOLERANCE = 1e-12


@dataclass(frozen=True)
class YamabeSolutionSpec:
    """Data (Phi, Psi, eps, sigma0) of one member of the Yamabe family.

    ``convention`` selects the amplitude in front of the profile:
    ``"d"`` uses ``(m + 2(k-1)) eps^2``, which solves
    ``L u = -m u^q``; ``"md"`` uses ``m (m + 2(k-1)) eps^2``, which
    solves ``L u = -u^q``.  The two agree for ``m = 1``.
    """

    gauge: GaugePair
    epsilon: float
    sigma0: np.ndarray | None = field(default=None, compare=False)
    convention: str = AMP_D

    def __post_init__(self):
        p = self.gauge.params
        if p.alpha != 1 or p.p != 2:
            raise ValueError("Yamabe solutions need alpha = 1 and p = 2")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if p.yamabe_dimension <= 0:
            raise ValueError("m + 2(k - 1) must be positive")
        if self.convention not in (AMP_D, AMP_MD):
            raise ValueError(f"unknown convention {self.convention!r}")
        s0 = np.zeros(p.k) if self.sigma0 is None else np.asarray(self.sigma0, dtype=float).reshape(p.k)
        object.__setattr__(self, "sigma0", s0)

    @property
    def m(self) -> int:
        return self.gauge.params.m

    @property
    def k(self) -> int:
        return self.gauge.params.k

    @property
    def dimension_shift(self) -> int:
        """m + 2(k - 1)."""
        return self.gauge.params.yamabe_dimension

    @property
    def critical_exponent(self) -> float:
        return (self.m + 2 * (self.k + 1)) / self.dimension_shift

    @property
    def amplitude(self) -> float:
        base = self.dimension_shift * self.epsilon**2
        return base if self.convention == AMP_D else self.m * base

    @property
    def magic_constant(self) -> float:
        """A = 16 m eps^2."""
        return 16.0 * self.m * self.epsilon**2

    @property
    def intertwining_constant(self) -> float:
        """lambda = m (m + 2(k-1)) eps^2."""
        return self.m * self.dimension_shift * self.epsilon**2

    def context(self, singular_margin: float = 1e-6) -> OperatorContext:
        return OperatorContext(self.gauge, singular_margin)


def _k_expr(spec: YamabeSolutionSpec, x, shift):
    g = spec.gauge
    z, s = g.split(x)
    if shift is not None:
        s = [si + ci for si, ci in zip(s, shift)]
    a = spec.epsilon**2 + g.phi_dual.squared(z)
    return a * a + 16.0 * g.psi_dual.squared(s)


def _k_singular(spec: YamabeSolutionSpec, shift):
    g = spec.gauge
    zs = g.phi_dual.squared_field().singular
    ss = g.psi_dual.squared_field().singular
    m = g.params.m
    c = np.zeros(g.params.k) if shift is None else shift

    def sing(x):
        x = np.asarray(x, dtype=float)
        return zs(x[..., :m]) | ss(x[..., m:] + c)

    return sing


def big_k_field(spec: YamabeSolutionSpec, shifted: bool = False) -> ScalarField:
    """K = (eps^2 + Phi0(z)^2)^2 + 16 Psi0(sigma)^2 (sigma -> sigma + sigma0 when ``shifted``)."""
    shift = spec.sigma0 if shifted else None
    return ScalarField(
        spec.gauge.params.N, lambda x: _k_expr(spec, x, shift), _k_singular(spec, shift), name="K"
    )


def rho_field(spec: YamabeSolutionSpec, shifted: bool = False) -> ScalarField:
    return big_k_field(spec, shifted).map(lambda v: jets.power(v, 0.25), name="rho")


def yamabe_field(spec: YamabeSolutionSpec) -> ScalarField:
    c, d = spec.amplitude, spec.dimension_shift
    return big_k_field(spec, shifted=True).map(lambda v: jets.power(c / v, d / 4.0), name="K_eps")


def big_k(spec: YamabeSolutionSpec, pt):
    return _scalar(evaluate(big_k_field(spec), pt))


def rho(spec: YamabeSolutionSpec, pt):
    return _scalar(evaluate(rho_field(spec), pt))


def yamabe_solution(spec: YamabeSolutionSpec, pt):
    return _scalar(evaluate(yamabe_field(spec), pt))


def _scalar(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


@dataclass(frozen=True)
class FundamentalSolutionSpec:
    gauge: GaugePair
    normalization: float = 1.0

    @property
    def logarithmic(self) -> bool:
        p = self.gauge.params
        return abs(p.p - p.Q) < BRANCH_TOLERANCE

    @property
    def exponent(self) -> float:
        """-(Q - p)/(p - 1) on the power branch."""
        p = self.gauge.params
        return -(p.Q - p.p) / (p.p - 1.0)


def fundamental_field(spec: FundamentalSolutionSpec) -> ScalarField:
    th = theta_dual_field(spec.gauge)
    c = spec.normalization
    if spec.logarithmic:
        return th.map(lambda v: c * jets.log(v), name="G_log")
    e = spec.exponent
    return th.map(lambda v: c * jets.power(v, e), name="G")


def fundamental_solution(spec: FundamentalSolutionSpec, pt, singular_margin: float = 1e-6):
    pt = np.asarray(pt, dtype=float)
    th = np.asarray(theta_dual_closed(spec.gauge, pt))
    if np.any(th <= singular_margin):
        raise PolePoint("fundamental solution evaluated at (or too close to) the pole")
    return _scalar(evaluate(fundamental_field(spec), pt))


# --- identity suite -------------------------------------------------------------


def _phi0_sq(spec, pts):
    g = spec.gauge
    m = g.params.m
    return np.asarray(g.phi_dual.squared([pts[..., i] for i in range(m)]), dtype=float)


def _k_parts(spec: YamabeSolutionSpec, pts, ctx=None):
    ctx = ctx or spec.context()
    j = jet2_eval(big_k_field(spec), pts)
    return ctx, j, _energy_density(ctx, j, pts), _grushin_from_jet(ctx, j, pts)


def verify_lemma_yam3(spec: YamabeSolutionSpec, samples, tolerance: float = 1e-9, excluded: int = 0) -> ResidualReport:
    """W(K) against 16 Phi0(z)^2 K."""
    pts = np.atleast_2d(samples)
    _, j, W, _ = _k_parts(spec, pts)
    return ResidualReport.from_values(
        "lemma_yam3", pts, W, 16 * _phi0_sq(spec, pts) * j.value, tolerance, excluded_count=excluded
    )


def verify_lemma_yam2(
    spec: YamabeSolutionSpec, samples, tolerance: float = 1e-9, excluded: int = 0
) -> dict[str, ResidualReport]:
    """Delta_Psi K = 32 k, Delta_Phi K = (4m+8) Phi0^2 + 4 m eps^2 and the combined L(K)."""
    pts = np.atleast_2d(samples)
    ctx = spec.context()
    m, k, eps2 = spec.m, spec.k, spec.epsilon**2
    lz, ls = block_laplacians(ctx, big_k_field(spec), pts)
    _, _, _, L = _k_parts(spec, pts, ctx)
    r2 = _phi0_sq(spec, pts)
    return {
        "delta_psi": ResidualReport.from_values(
            "lemma_yam2_delta_psi", pts, ls, np.full(len(pts), 32.0 * k), tolerance, excluded_count=excluded
        ),
        "delta_phi": ResidualReport.from_values(
            "lemma_yam2_delta_phi", pts, lz, (4 * m + 8) * r2 + 4 * m * eps2, tolerance, excluded_count=excluded
        ),
        "operator": ResidualReport.from_values(
            "lemma_yam2_operator", pts, L, 4 * (m + 2 * k + 2) * r2 + 4 * m * eps2, tolerance, excluded_count=excluded
        ),
    }


def magic_residual(ctx: OperatorContext, K: ScalarField, A: float, pts) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of 2(a+1) K L(K) = (Q + 2a) W(K) + A K^(2a/(a+1)), Q = m + (a+1) k."""
    p = ctx.params
    a = p.alpha
    j = jet2_eval(K, pts)
    W = _energy_density(ctx, j, pts)
    L = _grushin_from_jet(ctx, j, pts)
    lhs = 2 * (a + 1) * j.value * L
    rhs = (p.Q + 2 * a) * W + A * j.value ** (2 * a / (a + 1))
    return lhs, rhs


def recover_magic_constant(spec: YamabeSolutionSpec, samples) -> float:
    """Least-squares A in 4 L(K) - (m+2k+2) W(K)/K = A (a constant model, so the mean)."""
    pts = np.atleast_2d(samples)
    _, j, W, L = _k_parts(spec, pts)
    resid = 4 * L - (spec.m + 2 * spec.k + 2) * W / j.value
    return float(np.mean(resid))


def verify_magic(spec: YamabeSolutionSpec, samples, tolerance: float = 1e-9, excluded: int = 0) -> ResidualReport:
    """4 L(K) - (m+2k+2) W(K)/K against A = 16 m eps^2, scaled by A + |4 L(K)|."""
    pts = np.atleast_2d(samples)
    _, j, W, L = _k_parts(spec, pts)
    A = spec.magic_constant
    lhs = 4 * L - (spec.m + 2 * spec.k + 2) * W / j.value
    return ResidualReport.from_values(
        "magic", pts, lhs, np.full(len(pts), A), tolerance, scale=A + np.abs(4 * L), excluded_count=excluded,
        recovered_A=recover_magic_constant(spec, pts), A=A,
    )


def intertwining_lambda(m: int, k: int, alpha: float, A) :
    """lambda = A (m + (a+1) k - 2) / (4 (a+1)^2); exact when the inputs are Fractions."""
    a1 = alpha + 1
    return A * (m + a1 * k - 2) / (4 * a1 * a1)


def lambda_consistency(spec: YamabeSolutionSpec) -> bool:
    """Exact check that A(m+2k-2)/16 with A = 16 m eps^2 equals m(m+2(k-1)) eps^2."""
    eps2 = Fraction(spec.epsilon) ** 2
    A = 16 * spec.m * eps2
    lam = intertwining_lambda(spec.m, spec.k, Fraction(1), A)
    return lam == spec.m * (spec.m + 2 * (spec.k - 1)) * eps2


def profile_power(Q: float):
    """F(t) = t^-(Q-2), which solves F'' + (Q-1)/t F' = 0."""
    return lambda t: jets.power(t, -(Q - 2.0))


def ode_residual(Q: float, t) -> np.ndarray:
    """F''(t) + (Q-1)/t F'(t) for F(t) = t^-(Q-2), relative to |F''(t)|."""
    from .operators import _profile_derivatives

    t = np.asarray(t, dtype=float)
    d1, d2 = _profile_derivatives(profile_power(Q), t)
    return np.abs(d2 + (Q - 1) / t * d1) / np.abs(d2)


def verify_intertwining(spec: YamabeSolutionSpec, samples, tolerance: float = 1e-9, excluded: int = 0) -> ResidualReport:
    """L(rho^-(Q-2)) against -m (m + 2(k-1)) eps^2 rho^-(Q+2), Q = m + 2k."""
    pts = np.atleast_2d(samples)
    ctx = spec.context()
    Q = spec.m + 2 * spec.k
    u = rho_field(spec).map(profile_power(Q), name="rho^-(Q-2)")
    j = jet2_eval(u, pts)
    lhs = _grushin_from_jet(ctx, j, pts)
    r = evaluate(rho_field(spec), pts)
    rhs = -spec.intertwining_constant * r ** (-(Q + 2))
    ode = float(np.max(ode_residual(Q, r)))
    return ResidualReport.from_values(
        "intertwining", pts, lhs, rhs, tolerance, excluded_count=excluded,
        lambda_exact=lambda_consistency(spec), ode_max=ode,
    )


def rho_identities(ctx: OperatorContext, K: ScalarField, pts) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Both sides of the rho = K^(1/(2(a+1))) transfer identities for any positive K.

    Keys: ``gradient`` (W(rho) in terms of W(K)), ``operator`` (L(rho) in
    terms of L(K), W(K)) and ``profile`` (L(rho^-(Q-2)) in terms of K).
    """
    p = ctx.params
    a, Q = p.alpha, p.Q
    a1 = a + 1.0
    jk = jet2_eval(K, pts)
    Wk = _energy_density(ctx, jk, pts)
    Lk = _grushin_from_jet(ctx, jk, pts)
    rho_f = K.map(lambda v: jets.power(v, 1.0 / (2 * a1)), name="rho")
    jr = jet2_eval(rho_f, pts)
    r = jr.value
    out = {
        "gradient": (_energy_density(ctx, jr, pts), Wk / (4 * a1**2 * r ** (4 * a + 2))),
        "operator": (
            _grushin_from_jet(ctx, jr, pts),
            Lk / (2 * a1 * r ** (2 * a + 1)) - (2 * a + 1) / (4 * a1**2 * r ** (4 * a + 3)) * Wk,
        ),
    }
    from .operators import _profile_derivatives

    F = profile_power(Q)
    d1, d2 = _profile_derivatives(F, r)
    ju = jet2_eval(rho_f.map(F), pts)
    out["profile"] = (
        _grushin_from_jet(ctx, ju, pts),
        (2 * a1 * d1 / r * jk.value * Lk + (d2 - (2 * a + 1) / r * d1) * Wk) / (4 * a1**2 * r ** (4 * a + 2)),
    )
    return out


def generic_k_field(g: GaugePair, epsilon: float = 1.0) -> ScalarField:
    """(eps^2 + Phi0(z)^2)^(a+1) + 4(a+1)^2 Psi0(sigma)^2: a positive test function for any alpha."""
    a1 = g.params.alpha + 1.0
    phi0, psi0 = g.phi_dual, g.psi_dual

    def ev(x):
        z, s = g.split(x)
        return jets.power(epsilon**2 + phi0.squared(z), a1) + 4 * a1**2 * psi0.squared(s)

    zs, ss = phi0.squared_field().singular, psi0.squared_field().singular
    m = g.params.m
    return ScalarField(g.params.N, ev, lambda x: zs(np.asarray(x)[..., :m]) | ss(np.asarray(x)[..., m:]), "K_alpha")


def yamabe_residual(spec: YamabeSolutionSpec, samples, tolerance: float = 1e-7, excluded: int = 0) -> ResidualReport:
    """L(u) against -u^q for u = K_{eps, sigma0}, with jets."""
    pts = np.atleast_2d(samples)
    ctx = spec.context()
    j = jet2_eval(yamabe_field(spec), pts)
    lhs = _grushin_from_jet(ctx, j, pts)
    rhs = -(j.value**spec.critical_exponent)
    # with amplitude d eps^2 (d = m + 2(k-1)) the two sides differ by a constant factor; report it
    return ResidualReport.from_values(
        "yamabe", pts, lhs, rhs, tolerance, excluded_count=excluded,
        convention=spec.convention, lhs_over_rhs=float(np.median(lhs / rhs)),
    )


def yamabe_residual_fd(spec: YamabeSolutionSpec, samples, tolerance: float = 1e-4, excluded: int = 0, h=None) -> ResidualReport:
    """Same residual with the operator taken by nested central differences."""
    from .operators import fd_step, grushin_operator_fd

    pts = np.atleast_2d(samples)
    ctx = spec.context()
    u = yamabe_field(spec)
    if h is None:
        h = fd_step(ctx, pts, sigma_shift=spec.sigma0)
    lhs = np.atleast_1d(grushin_operator_fd(ctx, u, pts, h=h))
    rhs = -(evaluate(u, pts) ** spec.critical_exponent)
    return ResidualReport.from_values("yamabe_fd", pts, lhs, rhs, tolerance, excluded_count=excluded)


def fundamental_residual(
    spec: FundamentalSolutionSpec, samples, tolerance: float = 1e-7, excluded: int = 0, singular_margin: float = 1e-6
) -> ResidualReport:
    """p-operator of G, relative to W^((p-1)/2)/Theta0; the exact value is 0."""
    pts = np.atleast_2d(samples)
    ctx = OperatorContext(spec.gauge, singular_margin)
    u = fundamental_field(spec)
    j = jet2_eval(u, pts)
    lhs = _p_operator_from_jet(ctx, j, pts)
    th = theta_dual_closed(spec.gauge, pts)
    scale = natural_scale(ctx, u, pts, th)
    p = spec.gauge.params
    name = f"fundamental_a{p.alpha:g}_p{'Q' if spec.logarithmic else format(p.p, 'g')}"
    return ResidualReport.from_values(name, pts, lhs, np.zeros(len(pts)), tolerance, scale=scale, excluded_count=excluded)
