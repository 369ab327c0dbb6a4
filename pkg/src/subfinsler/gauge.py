"""Anisotropic gauges on R^m x R^k and the associated dilations.

Points are flat arrays ``(z_1..z_m, sigma_1..sigma_k)`` of length ``m + k``
(or stacks of them, shape ``(B, m + k)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import jets
from .errors import DimensionMismatch, NoConvergence, SingularPoint
from .jets import ScalarField
from .norms import DualSolverConfig, NormSpec, dual_norm_closed, euclidean


@dataclass(frozen=True)
class GrushinParams:
    m: int
    k: int
    alpha: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if self.m < 1 or self.k < 1:
            raise ValueError("m and k must be positive integers")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.p > 1:
            raise ValueError("p must lie in (1, inf)")

    @property
    def N(self) -> int:
        return self.m + self.k

    @property
    def Q(self) -> float:
        """Homogeneous dimension m + (alpha + 1) k."""
        return self.m + (self.alpha + 1) * self.k

    @property
    def yamabe_dimension(self) -> int:
        """m + 2(k - 1), the exponent scale of the alpha = 1 Yamabe solutions."""
        return self.m + 2 * (self.k - 1)


@dataclass(frozen=True)
class GaugePair:
    phi: NormSpec
    psi: NormSpec
    params: GrushinParams

    def __post_init__(self):
        if self.phi.dimension != self.params.m or self.psi.dimension != self.params.k:
            raise DimensionMismatch("norm dimensions must be (m, k)")

    @property
    def phi_dual(self) -> NormSpec:
        return dual_norm_closed(self.phi)

    @property
    def psi_dual(self) -> NormSpec:
        return dual_norm_closed(self.psi)

    def with_params(self, **changes) -> "GaugePair":
        p = self.params
        fields = dict(m=p.m, k=p.k, alpha=p.alpha, p=p.p)
        fields.update(changes)
        return GaugePair(self.phi, self.psi, GrushinParams(**fields))

    def split(self, x):
        """Split a coordinate list into its z and sigma blocks."""
        m = self.params.m
        return list(x[:m]), list(x[m:])

    def __str__(self):
        return f"{self.phi}/{self.psi}"


def euclidean_pair(m: int, k: int, alpha: float = 1.0, p: float = 2.0) -> GaugePair:
    return GaugePair(euclidean(m), euclidean(k), GrushinParams(m, k, alpha, p))


def _points(g: GaugePair, pt) -> np.ndarray:
    pt = np.asarray(pt, dtype=float)
    if pt.ndim == 0 or pt.shape[-1] != g.params.N:
        raise DimensionMismatch(f"points must have {g.params.N} coordinates, got shape {pt.shape}")
    return pt


def _cols(pt):
    return [pt[..., i] for i in range(pt.shape[-1])]


def _gauge_expr(phi: NormSpec, psi: NormSpec, alpha: float, z, s):
    # written with squared norms so that Euclidean blocks stay polynomial
    c2 = 4.0 * (alpha + 1.0) ** 2
    inner = jets.power(phi.squared(z), alpha + 1.0) + c2 * psi.squared(s)
    return jets.power(inner, 1.0 / (2.0 * (alpha + 1.0)))


def _as_float(out):
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def theta(g: GaugePair, pt):
    """(Phi(z)^(2(a+1)) + 4(a+1)^2 Psi(sigma)^2)^(1/(2(a+1)))."""
    z, s = g.split(_cols(_points(g, pt)))
    return _as_float(_gauge_expr(g.phi, g.psi, g.params.alpha, z, s))


def theta_dual_closed(g: GaugePair, pt):
    """The dual gauge, built from the closed-form dual norms."""
    z, s = g.split(_cols(_points(g, pt)))
    return _as_float(_gauge_expr(g.phi_dual, g.psi_dual, g.params.alpha, z, s))


def theta_dual_field(g: GaugePair) -> ScalarField:
    phi0, psi0, alpha = g.phi_dual, g.psi_dual, g.params.alpha

    def ev(x):
        z, s = g.split(x)
        return _gauge_expr(phi0, psi0, alpha, z, s)

    zsing = phi0.squared_field().singular
    ssing = psi0.squared_field().singular

    def sing(x):
        x = np.asarray(x, dtype=float)
        m = g.params.m
        return np.all(x == 0, axis=-1) | zsing(x[..., :m]) | ssing(x[..., m:])

    return ScalarField(g.params.N, ev, sing, name="theta0")


def r_alpha(m: int, alpha: float, pt):
    """(|z|^(2(a+1)) + 4(a+1)^2 |sigma|^2)^(1/(2(a+1))), written out directly."""
    pt = np.asarray(pt, dtype=float)
    z, s = pt[..., :m], pt[..., m:]
    a1 = alpha + 1.0
    nz = np.sqrt(np.sum(z * z, axis=-1))
    ns = np.sqrt(np.sum(s * s, axis=-1))
    return _as_float((nz ** (2 * a1) + 4 * a1**2 * ns**2) ** (1.0 / (2 * a1)))


def dilate(params: GrushinParams, t: float, pt) -> np.ndarray:
    """delta_t(z, sigma) = (t z, t^(alpha+1) sigma)."""
    if not t > 0:
        raise ValueError("dilation factor must be positive")
    pt = np.array(pt, dtype=float)
    pt[..., : params.m] *= t
    pt[..., params.m :] *= t ** (params.alpha + 1.0)
    return pt


def dilation_jacobian(params: GrushinParams, t: float) -> float:
    """Determinant of delta_t, equal to t^Q."""
    return float(np.prod(np.diag(dilation_matrix(params, t))))


def dilation_matrix(params: GrushinParams, t: float) -> np.ndarray:
    return np.diag([t] * params.m + [t ** (params.alpha + 1.0)] * params.k)


def _oracle_objective(g: GaugePair, zs: np.ndarray, ss: np.ndarray, v: np.ndarray) -> float:
    m, a1 = g.params.m, g.params.alpha + 1.0
    th = theta(g, v)
    if th == 0:
        return 0.0
    w = dilate(g.params, 1.0 / th, v)
    xi, tau = w[:m], w[m:]
    return abs(float(zs @ xi)) ** a1 + 4 * a1**2 * float(ss @ tau)


def theta_dual_oracle(g: GaugePair, pt, cfg: DualSolverConfig | None = None) -> float:
    """Dual gauge from its definition as a supremum over the unit Theta-sphere.

    Maximises ``|<z, xi>|^(a+1) + 4 (a+1)^2 <sigma, tau>`` over ``Theta(xi, tau) = 1``.
    Every trial vector is pushed onto the sphere by the dilation
    ``delta_{1/Theta}``, so the search itself is unconstrained (BFGS, several
    starts covering both signs of the tau block).
    """
    cfg = cfg or DualSolverConfig()
    pt = _points(g, pt)
    if pt.ndim != 1:
        raise DimensionMismatch("theta_dual_oracle takes a single point")
    if np.all(pt == 0):
        raise SingularPoint("theta_dual_oracle needs a point other than the origin")
    m, a1 = g.params.m, g.params.alpha + 1.0
    z, s = pt[:m], pt[m:]
    # rescale the input so the optimisation runs at unit size, then undo by homogeneity
    scale = r_alpha(m, g.params.alpha, pt)
    u = dilate(g.params, 1.0 / scale, pt)
    zs, ss = u[:m], u[m:]

    def neg(v):
        return -_oracle_objective(g, zs, ss, v)

    starts = [
        np.concatenate([zs, ss]),
        np.concatenate([zs, -ss]),
        np.concatenate([zs, np.zeros_like(ss)]),
        np.concatenate([np.zeros_like(zs) + 1e-3, ss]),
        np.concatenate([-zs, ss]),
    ]
    best = None
    for x0 in starts:
        if np.all(x0 == 0):
            continue
        res = optimize.minimize(
            neg, x0, method="BFGS", options={"gtol": cfg.tolerance, "maxiter": cfg.max_iterations}
        )
        if best is None or res.fun < best.fun:
            best = res
    # BFGS reports precision loss once the gradient is at rounding level; only
    # an iteration cap counts as failure
    if best is None or best.status == 1:
        raise NoConvergence("theta_dual_oracle: optimiser hit the iteration cap")
    value = -best.fun
    if value <= 0:
        raise NoConvergence("theta_dual_oracle: no positive value found")
    return scale * value ** (1.0 / a1)
