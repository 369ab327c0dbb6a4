"""Pointwise evaluation of Finsler Laplacians and the sub-Finsler Grushin operators.

All operators are evaluated in non-divergence form from second-order jets of
the argument.  With ``V = M(grad u) grad M(grad u) = grad(M^2/2)(grad u)``,

    div V = trace(D^2(M^2/2)(grad u) . D^2 u),

so only first and second derivatives of ``u`` and of the norm are needed.
The same expansion, together with the product rule for the energy density
``W``, gives the general-``p`` operator.

Everything here accepts a single point (shape ``(N,)``) or a batch
(shape ``(B, N)``) and returns a float or an array accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateGradient, DimensionMismatch, SingularPoint
from .gauge import GaugePair
from .jets import Jet2, ScalarField, evaluate, jet2_eval
from .norms import EUCLIDEAN, NormSpec, half_square_hessian

__all__ = [
    "OperatorContext",
    "finsler_laplacian",
    "radial_laplacian_check",
    "grushin_gradient_square",
    "grushin_operator",
    "grushin_operator_p",
    "grushin_operator_fd",
    "weight_field",
]


@dataclass(frozen=True)
class OperatorContext:
    gauge: GaugePair
    singular_margin: float = 1e-6

    def __post_init__(self):
        if not self.singular_margin > 0:
            raise ValueError("singular_margin must be positive")

    @property
    def params(self):
        return self.gauge.params


def _out(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


def _block_laplacian(M: NormSpec, grad, hess, margin: float) -> np.ndarray:
    if M.family == EUCLIDEAN:
        return np.trace(hess, axis1=-2, axis2=-1)
    if np.any(np.linalg.norm(grad, axis=-1) < margin):
        raise DegenerateGradient(f"gradient below {margin:g}: Finsler Laplacian of {M} undefined")
    coeff = half_square_hessian(M, grad)
    return np.sum(coeff * hess, axis=(-2, -1))


def finsler_laplacian(M: NormSpec, u: ScalarField, x, singular_margin: float = 1e-6):
    """div(M(grad u) grad M(grad u)) at ``x``."""
    if u.dimension != M.dimension:
        raise DimensionMismatch("field and norm live in different dimensions")
    j = jet2_eval(u, x)
    return _out(_block_laplacian(M, j.gradient, j.hessian, singular_margin))


def _profile_derivatives(kfun: Callable, t) -> tuple[np.ndarray, np.ndarray]:
    j = kfun(Jet2.variables(np.asarray(t, dtype=float)[..., None])[0])
    return j.gradient[..., 0], j.hessian[..., 0, 0]


def radial_laplacian_check(M: NormSpec, kfun: Callable, x, singular_margin: float = 1e-6):
    """Both sides of Delta_M(k(M0(x))) = k''(M0) + (n - 1) k'(M0) / M0.

    ``kfun`` must be written with the jet-aware helpers so it can be
    differentiated.  Returns ``(lhs, rhs)``.
    """
    from .norms import dual_norm_closed

    dual = dual_norm_closed(M)
    v = ScalarField(M.dimension, lambda y: kfun(dual(y)), dual.singular, name="k(M0)")
    lhs = finsler_laplacian(M, v, x, singular_margin)
    psi = evaluate(dual.field(), x)
    d1, d2 = _profile_derivatives(kfun, psi)
    rhs = d2 + (M.dimension - 1) / psi * d1
    return lhs, _out(rhs)


def weight_field(g: GaugePair) -> ScalarField:
    """Phi0(z)^(2 alpha) / 4 as a field on R^N (constant in sigma)."""
    phi0 = g.phi_dual
    m, alpha = g.params.m, g.params.alpha
    sq = phi0.squared_field()

    def ev(x):
        s = phi0.squared(list(x[:m]))
        return 0.25 * (s if alpha == 1 else s**alpha)

    def sing(x):
        x = np.asarray(x, dtype=float)
        mask = sq.singular(x[..., :m])
        if alpha < 1:
            mask = mask | np.all(x[..., :m] == 0, axis=-1)
        return mask

    return ScalarField(g.params.N, ev, sing, name="weight")


def _weight_value(g: GaugePair, pts: np.ndarray) -> np.ndarray:
    m = g.params.m
    s = np.asarray(g.phi_dual.squared([pts[..., i] for i in range(m)]), dtype=float)
    return 0.25 * s ** g.params.alpha


def _square(M: NormSpec, v: np.ndarray) -> np.ndarray:
    return np.asarray(M.squared([v[..., i] for i in range(M.dimension)]), dtype=float)


def _points(ctx: OperatorContext, pt) -> np.ndarray:
    pt = np.asarray(pt, dtype=float)
    if pt.ndim == 0 or pt.shape[-1] != ctx.params.N:
        raise DimensionMismatch(f"points must have {ctx.params.N} coordinates")
    return pt


def _energy_density(ctx: OperatorContext, j: Jet2, pts: np.ndarray) -> np.ndarray:
    g = ctx.gauge
    m = g.params.m
    return _square(g.phi, j.gradient[..., :m]) + _weight_value(g, pts) * _square(g.psi, j.gradient[..., m:])


def grushin_gradient_square(ctx: OperatorContext, u: ScalarField, pt):
    """W(u) = Phi(grad_z u)^2 + Phi0(z)^(2 alpha)/4 * Psi(grad_sigma u)^2."""
    pts = _points(ctx, pt)
    return _out(_energy_density(ctx, jet2_eval(u, pts), pts))


def _grushin_from_jet(ctx: OperatorContext, j: Jet2, pts: np.ndarray) -> np.ndarray:
    g = ctx.gauge
    m = g.params.m
    lz = _block_laplacian(g.phi, j.gradient[..., :m], j.hessian[..., :m, :m], ctx.singular_margin)
    ls = _block_laplacian(g.psi, j.gradient[..., m:], j.hessian[..., m:, m:], ctx.singular_margin)
    return lz + _weight_value(g, pts) * ls


def grushin_operator(ctx: OperatorContext, u: ScalarField, pt):
    """Delta_Phi u + Phi0(z)^(2 alpha)/4 * Delta_Psi u."""
    pts = _points(ctx, pt)
    return _out(_grushin_from_jet(ctx, jet2_eval(u, pts), pts))


def _half_square_gradient(M: NormSpec, v: np.ndarray) -> np.ndarray:
    # grad(M^2/2)(v) = M(v) grad M(v); vanishes at v = 0
    if M.family == EUCLIDEAN:
        return v.copy()
    if M.family != "pnorm":
        return v @ M.matrix
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(nv > 0, v, 1.0)
    out = _norm_values(M, safe)[..., None] * M.gradient_closed(safe)
    return np.where(nv > 0, out, 0.0)


def _norm_values(M: NormSpec, v: np.ndarray) -> np.ndarray:
    return np.asarray(M([v[..., i] for i in range(M.dimension)]), dtype=float)


def _p_operator_from_jet(ctx: OperatorContext, j: Jet2, pts: np.ndarray) -> np.ndarray:
    g = ctx.gauge
    m, p = g.params.m, g.params.p
    lap = _grushin_from_jet(ctx, j, pts)
    if p == 2:
        return lap
    W = _energy_density(ctx, j, pts)
    if p < 2 and np.any(W <= ctx.singular_margin):
        raise DegenerateGradient("energy density too small for p < 2")
    w = jet2_eval(weight_field(g), pts)
    gz, gs = j.gradient[..., :m], j.gradient[..., m:]
    vz = _half_square_gradient(g.phi, gz)
    vs = _half_square_gradient(g.psi, gs)
    # flux V = (vz, w vs); grad W = D^2u[:, z] 2 vz + D^2u[:, s] 2 w vs + grad w Psi(gs)^2
    hz = j.hessian[..., :, :m]
    hs = j.hessian[..., :, m:]
    grad_W = (
        2 * np.einsum("...ij,...j->...i", hz, vz)
        + 2 * w.value[..., None] * np.einsum("...ij,...j->...i", hs, vs)
        + w.gradient * _square(g.psi, gs)[..., None]
    )
    flux = np.concatenate([vz, w.value[..., None] * vs], axis=-1)
    return W ** ((p - 2) / 2) * lap + (p - 2) / 2 * W ** ((p - 4) / 2) * np.sum(grad_W * flux, axis=-1)


def grushin_operator_p(ctx: OperatorContext, u: ScalarField, pt):
    """div(W^((p-2)/2) V) with V = (Phi(grad_z u) grad Phi(grad_z u), w Psi(grad_s u) grad Psi(grad_s u)).

    This is the Euler-Lagrange operator of the energy (1/p) int W(u)^(p/2);
    for ``p == 2`` it is exactly :func:`grushin_operator`.
    """
    pts = _points(ctx, pt)
    return _out(_p_operator_from_jet(ctx, jet2_eval(u, pts), pts))


def natural_scale(ctx: OperatorContext, u: ScalarField, pt, theta0) -> np.ndarray:
    """W^((p-1)/2) / Theta0, the size of a single term of the p-operator."""
    pts = _points(ctx, pt)
    W = _energy_density(ctx, jet2_eval(u, pts), pts)
    return _out(W ** ((ctx.params.p - 1) / 2) / np.asarray(theta0))


# --- finite-difference oracle -------------------------------------------------


def _fd_gradient(u: ScalarField, pts: np.ndarray, h: np.ndarray) -> np.ndarray:
    n = u.dimension
    eye = np.eye(n)
    cols = []
    for i in range(n):
        step = h[..., None] * eye[i]
        lo, hi = pts - step, pts + step
        if np.any(u.singular(lo)) or np.any(u.singular(hi)):
            raise SingularPoint("finite-difference stencil hits the singular set")
        cols.append((evaluate(u, hi) - evaluate(u, lo)) / (2 * h))
    return np.stack(cols, axis=-1)


def flux(ctx: OperatorContext, grad: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """The vector field whose divergence is the p-operator, from a given gradient."""
    g = ctx.gauge
    m, p = g.params.m, g.params.p
    gz, gs = grad[..., :m], grad[..., m:]
    w = _weight_value(g, pts)
    vz = _half_square_gradient(g.phi, gz)
    vs = w[..., None] * _half_square_gradient(g.psi, gs)
    v = np.concatenate([vz, vs], axis=-1)
    if p == 2:
        return v
    W = _square(g.phi, gz) + w * _square(g.psi, gs)
    return W[..., None] ** ((p - 2) / 2) * v


def fd_step(ctx: OperatorContext, pts, sigma_shift=None) -> np.ndarray:
    """Default step of the nested difference oracle.

    ``1e-4 (1 + |x|_inf)``, reduced to a hundredth of the distance to the
    nearest coordinate hyperplane of any p-norm block: the duals of p-norms
    with p > 2 have unbounded third derivatives there, which the nested
    stencil would otherwise pick up.  ``sigma_shift`` moves the sigma
    hyperplanes (fields of sigma + sigma0).
    """
    pts = _points(ctx, pts)
    g = ctx.gauge
    m = g.params.m
    h = 1e-4 * (1.0 + np.max(np.abs(pts), axis=-1))
    if "pnorm" in (g.phi.family, g.phi_dual.family):
        h = np.minimum(h, 1e-2 * np.min(np.abs(pts[..., :m]), axis=-1))
    if "pnorm" in (g.psi.family, g.psi_dual.family):
        s = pts[..., m:] if sigma_shift is None else pts[..., m:] + sigma_shift
        h = np.minimum(h, 1e-2 * np.min(np.abs(s), axis=-1))
    return h


def grushin_operator_fd(ctx: OperatorContext, u: ScalarField, pt, h=None, h_inner=None):
    """Central-difference divergence of the flux, with a central-difference gradient.

    Uses only plain evaluations of ``u`` and the closed-form norm gradients,
    so it is independent of the jet arithmetic.  The default step is
    :func:`fd_step`.
    """
    pts = _points(ctx, pt)
    scale = np.ones(pts.shape[:-1])
    h = fd_step(ctx, pts) if h is None else np.broadcast_to(np.asarray(h, dtype=float), scale.shape)
    h_inner = h if h_inner is None else np.broadcast_to(np.asarray(h_inner, dtype=float), scale.shape)
    n = ctx.params.N
    eye = np.eye(n)
    div = np.zeros(pts.shape[:-1])
    for j in range(n):
        step = h[..., None] * eye[j]
        fp = flux(ctx, _fd_gradient(u, pts + step, h_inner), pts + step)[..., j]
        fm = flux(ctx, _fd_gradient(u, pts - step, h_inner), pts - step)[..., j]
        div = div + (fp - fm) / (2 * h)
    return _out(div)


def degenerate_mask(ctx: OperatorContext, u: ScalarField, pts) -> np.ndarray:
    """Points where a non-Euclidean block gradient is below the singular margin."""
    pts = _points(ctx, pts)
    j = jet2_eval(u, pts)
    g = ctx.gauge
    m = g.params.m
    mask = np.zeros(pts.shape[:-1], dtype=bool)
    if g.phi.family != EUCLIDEAN:
        mask |= np.linalg.norm(j.gradient[..., :m], axis=-1) < ctx.singular_margin
    if g.psi.family != EUCLIDEAN:
        mask |= np.linalg.norm(j.gradient[..., m:], axis=-1) < ctx.singular_margin
    return mask


def block_laplacians(ctx: OperatorContext, u: ScalarField, pt):
    """(Delta_Phi u, Delta_Psi u): the two Finsler Laplacians acting on the z and sigma blocks."""
    pts = _points(ctx, pt)
    j = jet2_eval(u, pts)
    g = ctx.gauge
    m = g.params.m
    lz = _block_laplacian(g.phi, j.gradient[..., :m], j.hessian[..., :m, :m], ctx.singular_margin)
    ls = _block_laplacian(g.psi, j.gradient[..., m:], j.hessian[..., m:, m:], ctx.singular_margin)
    return _out(lz), _out(ls)


def chain_rule_check(ctx: OperatorContext, u: ScalarField, F: Callable, pt) -> dict[str, np.ndarray]:
    """Both sides of W(F(u)) = F'(u)^2 W(u) and L(F(u)) = F'(u) L(u) + F''(u) W(u).

    ``F`` is a jet-aware scalar function.  Returns a dict with keys
    ``w_lhs, w_rhs, l_lhs, l_rhs``.
    """
    pts = _points(ctx, pt)
    fu = u.map(F, name=f"F({u.name})")
    j = jet2_eval(u, pts)
    jf = jet2_eval(fu, pts)
    d1, d2 = _profile_derivatives(F, j.value)
    W = _energy_density(ctx, j, pts)
    L = _grushin_from_jet(ctx, j, pts)
    return {
        "w_lhs": _energy_density(ctx, jf, pts),
        "w_rhs": d1**2 * W,
        "l_lhs": _grushin_from_jet(ctx, jf, pts),
        "l_rhs": d1 * L + d2 * W,
    }
