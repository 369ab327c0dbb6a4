"""Seeded sample clouds on R^m x R^k avoiding the degenerate sets of a gauge pair."""

from __future__ import annotations

import numpy as np

from .gauge import GaugePair, dilate, theta_dual_closed
from .norms import EUCLIDEAN, PNORM

RNG_ALGORITHM = "numpy.random.PCG64"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def _hyperplane_sensitive(*norms) -> bool:
    return any(n.family == PNORM for n in norms)


def sample_points(
    g: GaugePair,
    count: int,
    rng: np.random.Generator,
    sigma0=None,
    annulus: tuple[float, float] = (0.3, 3.0),
    margin: float = 1e-3,
    reject=None,
) -> tuple[np.ndarray, int]:
    """Draw ``count`` points with Theta0(z, sigma + sigma0) uniform in ``annulus``.

    Directions are Gaussian and are moved onto the requested gauge radius by
    the dilations.  Points with ``|z| < margin``, with ``|sigma + sigma0| <
    margin`` (non-Euclidean Psi), or within ``margin`` of a coordinate
    hyperplane of a p-norm block are rejected and counted, as are points for
    which the optional predicate ``reject`` (called on the final point) is true.
    Returns ``(points, excluded_count)``.
    """
    m, k = g.params.m, g.params.k
    shift = np.zeros(k) if sigma0 is None else np.asarray(sigma0, dtype=float)
    z_planes = _hyperplane_sensitive(g.phi, g.phi_dual)
    s_planes = _hyperplane_sensitive(g.psi, g.psi_dual)
    out = []
    excluded = 0
    while len(out) < count:
        y = rng.standard_normal(m + k)
        r = rng.uniform(*annulus)
        th = theta_dual_closed(g, y)
        if th == 0:
            excluded += 1
            continue
        y = dilate(g.params, r / th, y)
        z, s = y[:m], y[m:]
        bad = np.linalg.norm(z) < margin
        bad |= g.psi.family != EUCLIDEAN and np.linalg.norm(s) < margin
        bad |= z_planes and bool(np.any(np.abs(z) < margin))
        bad |= s_planes and bool(np.any(np.abs(s) < margin))
        x = np.concatenate([z, s - shift])
        if bad or (reject is not None and reject(x)):
            excluded += 1
            continue
        out.append(x)
    return np.array(out).reshape(count, m + k), excluded


def degenerate_rejector(ctx, *fields):
    """Predicate for ``sample_points``: some non-Euclidean block gradient of one of ``fields`` is below the margin."""
    from .operators import degenerate_mask

    return lambda x: any(bool(degenerate_mask(ctx, u, x[None, :])[0]) for u in fields)
