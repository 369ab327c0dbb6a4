import numpy as np
import pytest

from subfinsler.energy import (
    MIDPOINT,
    QuadratureSpec,
    axis_rule,
    bump_field,
    critical_exponent,
    dilated_field,
    energy,
    energy_fd,
    energy_result,
    integrate,
    lq_norm,
    measure_scaling,
    quotient_dilation_drift,
    refinement_ratio,
    sobolev_quotient,
    zero_field,
)
from subfinsler.errors import BudgetExceeded
from subfinsler.gauge import GrushinParams, euclidean_pair
from subfinsler.jets import ScalarField
from subfinsler.operators import OperatorContext
from subfinsler.solutions import YamabeSolutionSpec, yamabe_field

from conftest import make_pair

K_QUAD = QuadratureSpec(20.0, 16, grading=0.5, sigma_grading=0.1)


@pytest.fixture(scope="module")
def k10():
    g = euclidean_pair(3, 1)
    return OperatorContext(g), yamabe_field(YamabeSolutionSpec(g, 1.0))


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(1.0, 7)
    with pytest.raises(ValueError):
        QuadratureSpec(1.0, scheme="simpson")
    with pytest.raises(ValueError):
        QuadratureSpec(1.0, grading=-1.0)


@pytest.mark.parametrize("scheme", ["gauss-legendre", MIDPOINT])
@pytest.mark.parametrize("grading", [None, 0.3])
def test_axis_rule_integrates_polynomials(scheme, grading):
    x, w = axis_rule(64, 2.0, scheme, grading)
    # Gauss-Legendre is exact on an ungraded axis; the other rules are second order
    tol = 1e-14 if scheme != MIDPOINT and grading is None else 1e-2
    assert np.all(np.abs(x) <= 2.0)
    assert np.sum(w) == pytest.approx(4.0, rel=tol)
    assert np.sum(w * x * x) == pytest.approx(16 / 3, rel=tol)


def test_box_volume():
    params = GrushinParams(2, 1)
    q = QuadratureSpec(1.5, 8, sigma_half_width=0.5)
    res = integrate(params, lambda pts: np.ones(len(pts)), q)
    assert res.value == pytest.approx(q.volume(params), rel=1e-14)
    assert res.nodes == 8**3 and res.excluded == 0


def test_zero_energy():
    ctx = OperatorContext(euclidean_pair(2, 1))
    assert energy(ctx, zero_field(3), QuadratureSpec(1.0)) == 0.0


@pytest.mark.parametrize("pair", ["euclidean", "pnorm4_euclidean"])
def test_bump_energy_matches_fd_oracle(pair):
    ctx = OperatorContext(make_pair(pair, 2, 1))
    q = QuadratureSpec(1.0, 24)
    u = bump_field(3, 0.9, center=[0.05, -0.02, 0.03])
    e, e_fd = energy(ctx, u, q), energy_fd(ctx, u, q)
    assert e > 0
    assert abs(e / e_fd - 1) <= 1e-3


def test_bump_refinement():
    ctx = OperatorContext(euclidean_pair(2, 1))
    r = refinement_ratio(lambda q: energy(ctx, bump_field(3), q), QuadratureSpec(1.0, 24))
    assert abs(r - 1) <= 1e-3


def test_pnorm_exclusion_is_reported():
    ctx = OperatorContext(make_pair("pnorm4_euclidean", 2, 1))
    res = energy_result(ctx, bump_field(3), QuadratureSpec(1.0, 9, scheme=MIDPOINT))
    # the odd midpoint grid has a node row on z_i = 0
    assert res.excluded > 0 and res.margin == 1e-3


def test_lq_bump_bound_and_homogeneity():
    params = GrushinParams(2, 1)
    q = QuadratureSpec(1.0, 16)
    u = bump_field(3)
    h = u.scale(float(np.e))  # height 1 at the centre
    for qe in (2.0, 3.0, 5.0):
        assert lq_norm(h, qe, q, params) <= q.volume(params) ** (1 / qe)
        assert lq_norm(u.scale(3.5), qe, q, params) == pytest.approx(3.5 * lq_norm(u, qe, q, params), rel=1e-14)
    with pytest.raises(ValueError):
        lq_norm(u, 0.0, q, params)


def test_critical_exponent():
    assert critical_exponent(GrushinParams(3, 1)) == pytest.approx(10 / 3)
    with pytest.raises(ValueError):
        critical_exponent(GrushinParams(1, 1, p=3.0))


def test_lq_of_yamabe_refines(k10):
    ctx, u = k10
    qexp = critical_exponent(ctx.params)
    r = refinement_ratio(lambda q: lq_norm(u, qexp, q, ctx.params), K_QUAD)
    assert abs(r - 1) <= 5e-3


def test_quotient_scale_invariance(k10):
    ctx, u = k10
    q = QuadratureSpec(20.0, 12, grading=0.5, sigma_grading=0.1)
    a = sobolev_quotient(ctx, u, q)
    for lam in (0.1, 7.0):
        assert abs(sobolev_quotient(ctx, u.scale(lam), q) / a - 1) <= 1e-12


def test_quotient_refinement_and_drift(k10):
    ctx, u = k10
    base = sobolev_quotient(ctx, u, K_QUAD)
    assert np.isfinite(base) and base > 0
    assert abs(sobolev_quotient(ctx, u, K_QUAD.refined()) / base - 1) <= 1e-2
    for t in (0.5, 2.0):
        assert quotient_dilation_drift(ctx, u, K_QUAD, t).drift <= 1e-2


def test_wrong_normalization_drifts(k10):
    # dividing by E itself instead of (2E)^(1/2) is not dilation invariant
    ctx, u = k10
    from subfinsler.energy import lq_norm as lq

    q = K_QUAD
    qexp = critical_exponent(ctx.params)

    def naive(v, quad):
        return lq(v, qexp, quad, ctx.params) / energy(ctx, v, quad)

    a = naive(u, q)
    b = naive(dilated_field(ctx.params, u, 2.0), q.dilated(ctx.params, 0.5))
    assert abs(b / a - 1) > 0.5


def test_measure_scaling():
    params = GrushinParams(2, 1)
    q = QuadratureSpec(8.0, 48, grading=0.5, sigma_grading=0.1)
    for t in (0.5, 2.0):
        ratio, expected = measure_scaling(params, q, t)
        assert abs(ratio / expected - 1) <= 1e-3


def test_dilated_field(k10):
    ctx, u = k10
    from subfinsler.gauge import dilate
    from subfinsler.jets import evaluate

    x = np.array([[0.3, -0.2, 0.5, 0.7], [1.0, 0.0, 0.1, -0.4]])
    v = dilated_field(ctx.params, u, 1.7)
    assert np.allclose(evaluate(v, x), evaluate(u, dilate(ctx.params, 1.7, x)), rtol=1e-15)


def test_budget_and_dimension_cap():
    ctx = OperatorContext(euclidean_pair(2, 2))
    with pytest.raises(BudgetExceeded):
        energy(ctx, zero_field(4), QuadratureSpec(1.0, 64, budget=1000))
    big = OperatorContext(euclidean_pair(3, 3))
    with pytest.raises(BudgetExceeded):
        energy(big, zero_field(6), QuadratureSpec(1.0, 8))
    with pytest.raises(ValueError):  # BudgetExceeded is a ValueError
        energy(big, ScalarField(6, lambda x: x[0]), QuadratureSpec(1.0, 8))
