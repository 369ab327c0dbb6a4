import numpy as np
import pytest

from subfinsler import norms as nm
from subfinsler.errors import DimensionMismatch, NoConvergence, SingularPoint
from subfinsler.norms import (
    DualSolverConfig,
    check_norm_identities,
    convexity_spot_check,
    dual_norm_closed,
    dual_norm_numeric,
    ellipticity_bounds,
    equivalence_constants,
    norm_eval,
    norm_jet,
    sample_nonsingular,
)

from conftest import all_norms


def test_norm_values():
    assert norm_eval(nm.euclidean(2), [3, 4]) == 5
    assert norm_eval(nm.pnorm(2, 4), [1, 1]) == pytest.approx(2**0.25, rel=1e-15)
    assert norm_eval(nm.ellipsoid(np.diag([4.0, 1.0])), [1, 0]) == 2


def test_euclidean_gradient():
    assert np.array_equal(norm_jet(nm.euclidean(2), [0.0, 2.0]).gradient, [0.0, 1.0])


def test_pnorm_gradient_degree_zero():
    M = nm.pnorm(2, 4)
    g1 = norm_jet(M, [1.0, 1.0]).gradient
    g2 = norm_jet(M, [2.0, 2.0]).gradient
    assert np.max(np.abs(g1 - g2)) <= 1e-12
    assert np.allclose(g1, 2 ** (0.25 - 1) * np.ones(2), rtol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_euler_identity(rng, n):
    for M in all_norms(n):
        x = sample_nonsingular(M, 100, rng)
        j = norm_jet(M, x)
        assert np.max(np.abs(np.sum(j.gradient * x, axis=-1) - j.value) / j.value) <= 1e-12


def test_closed_duals():
    assert dual_norm_closed(nm.euclidean(3)) == nm.euclidean(3)
    d = dual_norm_closed(nm.pnorm(3, 4))
    assert d.family == nm.PNORM and d.exponent == pytest.approx(4 / 3, rel=1e-15)
    e = dual_norm_closed(nm.ellipsoid(np.diag([4.0, 1.0])))
    assert np.allclose(e.matrix, np.diag([0.25, 1.0]), rtol=1e-15)


def test_numeric_dual_examples():
    assert dual_norm_numeric(nm.euclidean(2), np.array([3.0, 4.0])) == pytest.approx(5, rel=1e-14)
    assert dual_norm_numeric(nm.pnorm(2, 4), np.array([1.0, 1.0])) == pytest.approx(2**0.75, rel=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_numeric_dual_matches_closed(rng, n):
    for M in all_norms(n) + [nm.ellipsoid(np.diag([4.0, 1.0, 2.0])[:n, :n])]:
        d = dual_norm_closed(M)
        for x in sample_nonsingular(M, 30, rng):
            assert dual_norm_numeric(M, x) == pytest.approx(norm_eval(d, x), rel=1e-8)


def test_numeric_dual_maximizer_on_unit_sphere(rng):
    M = nm.ellipsoid(nm.default_ellipsoid_matrix(3))
    cfg = DualSolverConfig()
    for x in rng.standard_normal((10, 3)):
        val, xi = dual_norm_numeric(M, x, cfg, return_maximizer=True)
        assert abs(norm_eval(M, xi) - 1) <= cfg.tolerance
        # consistency: the value equals <x, grad M0(x)>
        g = norm_jet(dual_norm_closed(M), x).gradient
        assert val == pytest.approx(float(x @ g), rel=1e-10)


def test_biduality(rng):
    for M in all_norms(3):
        dd = dual_norm_closed(dual_norm_closed(M))
        x = rng.standard_normal((20, 3))
        assert np.allclose(norm_eval(dd, x), norm_eval(M, x), rtol=1e-12)


def test_identities_euclidean(rng):
    rep = check_norm_identities(nm.euclidean(3), rng.standard_normal((50, 3)))
    assert rep.worst_equality() <= 1e-14
    assert rep.cauchy_schwarz_slack >= -1e-12


def test_identities_pnorm4_r3(rng):
    M = nm.pnorm(3, 4)
    rep = check_norm_identities(M, sample_nonsingular(M, 100, rng))
    assert rep.worst_equality() <= 1e-9
    assert rep.cauchy_schwarz_slack >= -1e-12


def test_cauchy_schwarz_ellipsoid(rng):
    M = nm.ellipsoid(nm.default_ellipsoid_matrix(3))
    d = dual_norm_closed(M)
    x, y = rng.standard_normal((50, 3)), rng.standard_normal((50, 3))
    assert np.all(norm_eval(M, x) * norm_eval(d, y) >= np.abs(np.sum(x * y, axis=1)))


def test_ellipticity_euclidean(rng):
    lo, hi = ellipticity_bounds(nm.euclidean(3), rng.standard_normal((20, 3)))
    assert lo == pytest.approx(1, abs=1e-15) and hi == pytest.approx(1, abs=1e-15)


def test_ellipticity_diag_ellipsoid(rng):
    M = nm.ellipsoid(np.diag([4.0, 1.0]))
    lo, hi = ellipticity_bounds(M, np.vstack([rng.standard_normal((50, 2)), [[1, 0], [0, 1]]]))
    assert 1 - 1e-14 <= lo and hi <= 4 + 1e-14
    assert lo == pytest.approx(1, rel=1e-14) and hi == pytest.approx(4, rel=1e-14)


def test_ellipticity_pnorm4_within_equivalence(rng):
    M = nm.pnorm(2, 4)
    a, b = equivalence_constants(M)
    assert (a, b) == pytest.approx((2**-0.25, 1.0), rel=1e-15)
    lo, hi = ellipticity_bounds(M, sample_nonsingular(M, 200, rng))
    assert a**2 - 1e-14 <= lo <= hi <= b**2 + 1e-14


def test_equivalence_constants_bound_samples(rng):
    for M in all_norms(3):
        a, b = equivalence_constants(M)
        x = rng.standard_normal((200, 3))
        r = norm_eval(M, x) / np.linalg.norm(x, axis=1)
        assert a - 1e-14 <= r.min() and r.max() <= b + 1e-14


def test_convexity_spot_check(rng):
    for M in all_norms(3):
        assert convexity_spot_check(M, sample_nonsingular(M, 20, rng)) > 0


def test_homogeneity(rng):
    for M in all_norms(3):
        x = rng.standard_normal((100, 3))
        lam = rng.uniform(-5, 5, 100)
        lhs = norm_eval(M, lam[:, None] * x)
        assert np.max(np.abs(lhs - np.abs(lam) * norm_eval(M, x)) / lhs) <= 1e-13


def test_validation():
    with pytest.raises(ValueError):
        nm.pnorm(2, 1.0)
    with pytest.raises(ValueError):
        nm.ellipsoid([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        nm.ellipsoid([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        DualSolverConfig(tolerance=0)
    with pytest.raises(DimensionMismatch):
        norm_eval(nm.euclidean(2), [1.0, 2.0, 3.0])
    assert nm.pnorm(3, 2) == nm.euclidean(3)


def test_singular_sets():
    with pytest.raises(SingularPoint):
        norm_jet(nm.euclidean(2), [0.0, 0.0])
    with pytest.raises(SingularPoint):
        norm_jet(nm.pnorm(2, 1.5), [0.0, 1.0])
    # p >= 2 is twice differentiable on the hyperplanes
    norm_jet(nm.pnorm(2, 4), [0.0, 1.0])
    with pytest.raises(SingularPoint):
        dual_norm_numeric(nm.euclidean(2), np.zeros(2))


def test_no_convergence_reported():
    with pytest.raises(NoConvergence):
        dual_norm_numeric(nm.pnorm(3, 4), np.array([1.0, 0.3, -2.0]), DualSolverConfig(1e-300, 1))


def test_ellipsoid_matrix_is_frozen():
    M = nm.ellipsoid(np.eye(2))
    with pytest.raises(ValueError):
        M.matrix[0, 0] = 3.0
