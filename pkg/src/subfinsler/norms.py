"""Minkowski norms: built-in families, derivatives and Legendre duals.

Three families are supported: the Euclidean norm, the ``l^p`` norms
(``p > 1``) and ellipsoidal norms ``sqrt(<A x, x>)`` with ``A`` symmetric
positive definite.  Each family has a closed-form dual
(:func:`dual_norm_closed`), and :func:`dual_norm_numeric` evaluates the dual
directly from its definition as a supremum, so the two can be checked against
each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import DimensionMismatch, NoConvergence, SingularPoint
from .jets import Jet2, ScalarField

EUCLIDEAN = "euclidean"
PNORM = "pnorm"
ELLIPSOID = "ellipsoid"

# coordinate hyperplanes closer than this are treated as singular for p < 2
HYPERPLANE_MARGIN = 0.0


@dataclass(frozen=True)
class NormSpec:
    family: str
    dimension: int
    exponent: float | None = None
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.family == PNORM:
            if self.exponent is None or not self.exponent > 1:
                raise ValueError("p-norm exponent must be > 1")
        elif self.family == ELLIPSOID:
            a = np.array(self.matrix, dtype=float)
            if a.shape != (self.dimension, self.dimension):
                raise DimensionMismatch("ellipsoid matrix must be n x n")
            if not np.allclose(a, a.T, rtol=0, atol=1e-14 * np.abs(a).max()):
                raise ValueError("ellipsoid matrix must be symmetric")
            a = 0.5 * (a + a.T)
            if np.linalg.eigvalsh(a)[0] <= 0:
                raise ValueError("ellipsoid matrix must be positive definite")
            a.setflags(write=False)
            object.__setattr__(self, "matrix", a)
        elif self.family != EUCLIDEAN:
            raise ValueError(f"unknown norm family {self.family!r}")

    # --- evaluation on coordinate lists (floats, arrays or jets) ---

    def squared(self, x):
        """M(x)^2 for a list of coordinates."""
        if len(x) != self.dimension:
            raise DimensionMismatch(f"norm of dimension {self.dimension} got {len(x)} coordinates")
        if self.family == EUCLIDEAN:
            return sum(xi * xi for xi in x)
        if self.family == PNORM:
            return jets.power(sum(jets.abs_pow(xi, self.exponent) for xi in x), 2.0 / self.exponent)
        a = self.matrix
        n = self.dimension
        total = 0.0
        for i in range(n):
            total = total + a[i, i] * (x[i] * x[i])
            for j in range(i + 1, n):
                total = total + 2.0 * a[i, j] * (x[i] * x[j])
        return total

    def __call__(self, x):
        if self.family == PNORM:
            if len(x) != self.dimension:
                raise DimensionMismatch(f"norm of dimension {self.dimension} got {len(x)} coordinates")
            return jets.power(sum(jets.abs_pow(xi, self.exponent) for xi in x), 1.0 / self.exponent)
        return jets.sqrt(self.squared(x))

    def singular(self, x) -> np.ndarray:
        """Points where M is not C^2: the origin, plus coordinate hyperplanes when p < 2."""
        x = np.asarray(x, dtype=float)
        mask = np.all(x == 0, axis=-1)
        if self.family == PNORM and self.exponent < 2:
            mask = mask | np.any(np.abs(x) <= HYPERPLANE_MARGIN, axis=-1)
        return mask

    def field(self) -> ScalarField:
        return ScalarField(self.dimension, self, self.singular, name=str(self))

    def squared_field(self) -> ScalarField:
        def sing(x):
            x = np.asarray(x, dtype=float)
            if self.family == PNORM:
                return self.singular(x)
            return np.zeros(x.shape[:-1], dtype=bool)

        return ScalarField(self.dimension, self.squared, sing, name=f"{self}^2")

    def gradient_closed(self, x) -> np.ndarray:
        """Analytic gradient of M at ``x`` (shape ``(..., n)``); no jets involved."""
        x = np.asarray(x, dtype=float)
        val = norm_eval(self, x)[..., None]
        if self.family == EUCLIDEAN:
            return x / val
        if self.family == PNORM:
            p = self.exponent
            return np.sign(x) * np.abs(x) ** (p - 1) / val ** (p - 1)
        return x @ self.matrix / val

    def __str__(self):
        if self.family == PNORM:
            return f"PNorm({self.exponent:g})[{self.dimension}]"
        if self.family == ELLIPSOID:
            return f"Ellipsoid[{self.dimension}]"
        return f"Euclidean[{self.dimension}]"


def euclidean(n: int) -> NormSpec:
    return NormSpec(EUCLIDEAN, n)


def pnorm(n: int, p: float) -> NormSpec:
    if p == 2:
        return euclidean(n)
    return NormSpec(PNORM, n, exponent=float(p))


def ellipsoid(a) -> NormSpec:
    a = np.array(a, dtype=float)
    return NormSpec(ELLIPSOID, a.shape[0], matrix=a)


def default_ellipsoid_matrix(n: int) -> np.ndarray:
    """A fixed, non-diagonal SPD matrix used by the named norm pairs."""
    a = np.diag(1.0 + 0.75 * np.arange(n))
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = 0.3
    return a


def _as_points(M: NormSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != M.dimension:
        raise DimensionMismatch(f"{M} evaluated at points of shape {x.shape}")
    return x


def norm_eval(M: NormSpec, x) -> np.ndarray | float:
    x = _as_points(M, x)
    out = np.asarray(M([x[..., i] for i in range(M.dimension)]), dtype=float)
    return float(out) if out.ndim == 0 else out


def norm_jet(M: NormSpec, x) -> Jet2:
    """Value, gradient and Hessian of M at ``x`` by forward differentiation."""
    x = _as_points(M, x)
    if np.any(M.singular(x)):
        raise SingularPoint(f"{M} is not C^2 at the requested point")
    return jets.jet2_eval(M.field(), x)


def half_square_hessian(M: NormSpec, g) -> np.ndarray:
    """Hessian of M^2/2 at ``g``: the coefficient matrix of the Finsler Laplacian."""
    g = _as_points(M, g)
    if M.family == EUCLIDEAN:
        return np.broadcast_to(np.eye(M.dimension), g.shape + (M.dimension,)).copy()
    if M.family == ELLIPSOID:
        return np.broadcast_to(M.matrix, g.shape + (M.dimension,)).copy()
    return 0.5 * norm_square_jet(M, g).hessian


def norm_square_jet(M: NormSpec, x) -> Jet2:
    x = _as_points(M, x)
    f = M.squared_field()
    if np.any(f.singular(x)):
        raise SingularPoint(f"{M}^2 is not C^2 at the requested point")
    return jets.jet2_eval(f, x)


def dual_norm_closed(M: NormSpec) -> NormSpec:
    if M.family == EUCLIDEAN:
        return M
    if M.family == PNORM:
        p = M.exponent
        return pnorm(M.dimension, p / (p - 1.0))
    return ellipsoid(np.linalg.inv(M.matrix))


def equivalence_constants(M: NormSpec) -> tuple[float, float]:
    """Constants (a, b) with a|x| <= M(x) <= b|x|, both sharp."""
    n = M.dimension
    if M.family == EUCLIDEAN:
        return 1.0, 1.0
    if M.family == PNORM:
        c = n ** (1.0 / M.exponent - 0.5)
        return (min(c, 1.0), max(c, 1.0))
    ev = np.linalg.eigvalsh(M.matrix)
    return float(np.sqrt(ev[0])), float(np.sqrt(ev[-1]))


@dataclass(frozen=True)
class DualSolverConfig:
    tolerance: float = 1e-12
    max_iterations: int = 500

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def _quotient_parts(M: NormSpec, x, eta):
    j = norm_jet(M, eta)
    mv, gm, hm = float(j.value), j.gradient, j.hessian
    xe = float(x @ eta)
    f = xe / mv
    grad = x / mv - xe * gm / mv**2
    hess = (
        -(np.outer(x, gm) + np.outer(gm, x)) / mv**2
        + 2 * xe * np.outer(gm, gm) / mv**3
        - xe * hm / mv**2
    )
    return f, grad, hess


def dual_norm_numeric(M: NormSpec, x, cfg: DualSolverConfig | None = None, return_maximizer: bool = False):
    """sup {<x, xi> : M(xi) = 1}, found by ascent on the quotient <x, eta>/M(eta).

    The iterate lives on the Euclidean unit sphere.  The search direction is
    the Riemannian Newton step when the projected Hessian is negative definite
    and the projected gradient otherwise; either is backtracked until the
    quotient does not decrease.
    """
    cfg = cfg or DualSolverConfig()
    x = _as_points(M, x)
    if x.ndim != 1:
        raise DimensionMismatch("dual_norm_numeric takes a single point")
    nx = np.linalg.norm(x)
    if nx == 0:
        raise SingularPoint("dual norm solver needs x != 0")
    xs = x / nx
    n = M.dimension
    eta = xs.copy()
    for _ in range(cfg.max_iterations):
        f, grad, hess = _quotient_parts(M, xs, eta)
        proj = np.eye(n) - np.outer(eta, eta)
        g_t = proj @ grad
        h_t = proj @ hess @ proj - float(eta @ grad) * proj
        # the normal direction is pinned to -1 so the system stays invertible
        h_aug = h_t - np.outer(eta, eta)
        direction = g_t
        if np.all(np.linalg.eigvalsh(0.5 * (h_aug + h_aug.T)) < 0):
            newton = -np.linalg.solve(h_aug, g_t)
            if np.all(np.isfinite(newton)):
                direction = newton
        t = 1.0
        while True:
            trial = eta + t * direction
            trial /= np.linalg.norm(trial)
            if not np.any(M.singular(trial)) and float(xs @ trial) / norm_eval(M, trial) >= f - 1e-15 * abs(f):
                break
            t *= 0.5
            if t < 1e-14:
                trial = eta
                break
        change = np.linalg.norm(trial - eta)
        eta = trial
        if change <= cfg.tolerance:
            break
    else:
        raise NoConvergence(f"dual norm of {M} did not converge in {cfg.max_iterations} iterations")
    m_eta = norm_eval(M, eta)
    xi = eta / m_eta
    value = nx * float(xs @ xi)
    return (value, xi) if return_maximizer else value


@dataclass
class NormIdentityReport:
    """Worst-case deviations of the basic primal/dual norm identities."""

    finabla_dual: float  # max |M(grad M0(x)) - 1|
    finabla_primal: float  # max |M0(grad M(x)) - 1|
    bp_dual: float  # max |M0(x) grad M(grad M0(x)) - x|_inf / (1 + |x|_inf)
    bp_primal: float  # max |M(x) grad M0(grad M(x)) - x|_inf / (1 + |x|_inf)
    euler: float  # max |<grad M(x), x> - M(x)| / M(x)
    cauchy_schwarz_slack: float  # min over pairs of M(x) M0(y) - |<x, y>|

    def worst_equality(self) -> float:
        return max(self.finabla_dual, self.finabla_primal, self.bp_dual, self.bp_primal, self.euler)


def identity_residuals(M: NormSpec, samples) -> dict[str, np.ndarray]:
    """Per-point residuals behind :func:`check_norm_identities`."""
    x = _as_points(M, np.atleast_2d(samples))
    dual = dual_norm_closed(M)
    jm = norm_jet(M, x)
    jd = norm_jet(dual, x)
    grad_m, grad_d = jm.gradient, jd.gradient
    scale = 1.0 + np.max(np.abs(x), axis=-1)
    return {
        "finabla_dual": np.abs(norm_eval(M, grad_d) - 1.0),
        "finabla_primal": np.abs(norm_eval(dual, grad_m) - 1.0),
        "bp_dual": np.max(np.abs(jd.value[:, None] * norm_jet(M, grad_d).gradient - x), axis=-1) / scale,
        "bp_primal": np.max(np.abs(jm.value[:, None] * norm_jet(dual, grad_m).gradient - x), axis=-1) / scale,
        "euler": np.abs(np.sum(grad_m * x, axis=-1) - jm.value) / jm.value,
    }


def check_norm_identities(M: NormSpec, samples) -> NormIdentityReport:
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    res = identity_residuals(M, x)
    dual = dual_norm_closed(M)
    mx = norm_eval(M, x)
    md = norm_eval(dual, x)
    # all ordered pairs (x_i, y_j)
    slack = mx[:, None] * md[None, :] - np.abs(x @ x.T)
    return NormIdentityReport(
        finabla_dual=float(res["finabla_dual"].max()),
        finabla_primal=float(res["finabla_primal"].max()),
        bp_dual=float(res["bp_dual"].max()),
        bp_primal=float(res["bp_primal"].max()),
        euler=float(res["euler"].max()),
        cauchy_schwarz_slack=float(slack.min()),
    )


def ellipticity_bounds(M: NormSpec, samples) -> tuple[float, float]:
    """Empirical min/max of <grad(M^2/2)(xi), xi> / |xi|^2 over the samples.

    The half-square normalisation is the one entering the Finsler Laplacian;
    by Euler's relation the ratio equals M(xi)^2/|xi|^2 and therefore lies in
    ``[a^2, b^2]`` for the equivalence constants of :func:`equivalence_constants`.
    """
    xi = _as_points(M, np.atleast_2d(samples))
    g = 0.5 * norm_square_jet(M, xi).gradient
    ratio = np.sum(g * xi, axis=-1) / np.sum(xi * xi, axis=-1)
    return float(ratio.min()), float(ratio.max())


def convexity_spot_check(M: NormSpec, samples) -> float:
    """Smallest eigenvalue of D^2(M^2) over the samples (must be > 0)."""
    h = norm_square_jet(M, np.atleast_2d(samples)).hessian
    return float(np.linalg.eigvalsh(h)[..., 0].min())


def sample_nonsingular(M: NormSpec, count: int, rng: np.random.Generator, margin: float = 1e-3) -> np.ndarray:
    """Gaussian points kept at least ``margin`` away from every coordinate hyperplane."""
    out = []
    while len(out) < count:
        x = rng.standard_normal(M.dimension)
        if np.all(np.abs(x) >= margin):
            out.append(x)
    return np.array(out)
