import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from igk import (
    ContractError,
    DomainError,
    DominationError,
    ExponentError,
    MarkovKernel,
    NegativeDensityError,
    ParameterDomain,
    ParametrizedMeasureModel,
    SampleSpace,
    TangentVector,
    TensorValue,
    ZeroMassError,
    amari_chentsov,
    canonical_tensor,
    check_k_integrability,
    evaluate,
    fisher_metric,
    induced_model,
    k_norm,
    log_derivative,
    mass_gradient,
    normalize_model,
    power_path,
    pushforward,
    tau_n,
    tau_tensor,
)
from igk.families import bernoulli

from conftest import exp_family_model, random_kernel, random_space


# ---------------------------------------------------------------------------
# domains and tangent vectors
# ---------------------------------------------------------------------------

def test_domain_membership_is_strictly_open():
    dom = ParameterDomain(((0.0, 1.0), (-math.inf, math.inf)))
    assert dom.dim == 2
    assert dom.contains([0.5, 100.0])
    assert not dom.contains([0.0, 0.0])
    assert not dom.contains([1.0, 0.0])
    assert not dom.contains([0.5])
    with pytest.raises(DomainError):
        ParameterDomain(((1.0, 1.0),))


def test_tangent_vector_shape_check():
    TangentVector([0.5], [1.0])
    with pytest.raises(DomainError):
        TangentVector([0.5], [1.0, 2.0])


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_bernoulli_evaluate():
    model = bernoulli()
    mu = evaluate(model, [0.25])
    np.testing.assert_allclose(mu.mass, [0.25, 0.75])
    with pytest.raises(DomainError):
        evaluate(model, [0.0])
    with pytest.raises(DomainError):
        evaluate(model, [1.1])


def test_evaluate_contract_checks():
    space = SampleSpace(["a", "b"])
    dom = ParameterDomain(((0.0, 1.0),))
    negative = ParametrizedMeasureModel(dom, space, lambda xi: np.array([-1.0, 1.0]))
    with pytest.raises(NegativeDensityError):
        evaluate(negative, [0.5])
    wrong_shape = ParametrizedMeasureModel(dom, space, lambda xi: np.ones(3))
    with pytest.raises(ContractError):
        evaluate(wrong_shape, [0.5])
    fake_statistical = ParametrizedMeasureModel(
        dom, space, lambda xi: np.array([1.0, 1.0]), statistical=True
    )
    with pytest.raises(ContractError):
        evaluate(fake_statistical, [0.5])


def test_evaluate_uses_base_weights():
    space = SampleSpace(["a", "b"], weights=[0.5, 2.0])
    model = ParametrizedMeasureModel(
        ParameterDomain(((0.0, 2.0),)), space, lambda xi: np.array([xi[0], xi[0]])
    )
    np.testing.assert_allclose(evaluate(model, [1.0]).mass, [0.5, 2.0])


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

def test_bernoulli_log_derivative():
    model = bernoulli()
    ld = log_derivative(model, [0.25], [1.0])
    np.testing.assert_allclose(ld, [4.0, -4.0 / 3.0])
    # TangentVector spelling is equivalent
    ld2 = log_derivative(model, [0.25], TangentVector([0.25], [1.0]))
    np.testing.assert_array_equal(ld, ld2)


def test_log_derivative_zero_on_null_atoms():
    space = SampleSpace(["a", "b"])
    model = ParametrizedMeasureModel(
        ParameterDomain(((0.0, 1.0),)),
        space,
        lambda xi: np.array([xi[0], 0.0]),
        density_grad=lambda xi: np.array([[1.0, 0.0]]),
    )
    np.testing.assert_allclose(log_derivative(model, [0.5], [1.0]), [2.0, 0.0])


def test_log_derivative_detects_broken_domination():
    space = SampleSpace(["a", "b"])
    model = ParametrizedMeasureModel(
        ParameterDomain(((0.0, 1.0),)),
        space,
        lambda xi: np.array([xi[0], 0.0]),
        density_grad=lambda xi: np.array([[1.0, 1.0]]),
    )
    with pytest.raises(DominationError, match="'b'"):
        log_derivative(model, [0.5], [1.0])


def test_finite_difference_fallback_matches_analytic():
    rng = np.random.default_rng(3)
    model = exp_family_model(rng, 5, 2)
    blind = ParametrizedMeasureModel(
        model.domain, model.space, model.density, statistical=False
    )
    xi = np.array([0.3, -0.4])
    np.testing.assert_allclose(
        mass_gradient(blind, xi), mass_gradient(model, xi), rtol=1e-8
    )
    np.testing.assert_allclose(
        log_derivative(blind, xi, [1.0, 2.0]),
        log_derivative(model, xi, [1.0, 2.0]),
        rtol=1e-8,
    )


def test_finite_difference_respects_open_bounds():
    # near the boundary the step must shrink instead of leaving the domain
    space = SampleSpace(["a"])
    model = ParametrizedMeasureModel(
        ParameterDomain(((0.0, 1.0),)), space, lambda xi: np.array([xi[0] ** 2])
    )
    xi = np.array([1e-8])
    g = mass_gradient(model, xi)
    np.testing.assert_allclose(g, [[2e-8]], rtol=1e-3)


def test_k_norm_values():
    model = bernoulli()
    xi = [0.25]
    # sqrt(0.25*16 + 0.75*16/9) = sqrt(16/3)
    assert k_norm(model, xi, [1.0], 2) == pytest.approx(math.sqrt(16.0 / 3.0))
    assert k_norm(model, xi, [1.0], math.inf) == 4.0


# ---------------------------------------------------------------------------
# integrability probe
# ---------------------------------------------------------------------------

def test_check_k_integrability_smooth_model_passes():
    model = bernoulli()
    grid = [[x] for x in np.linspace(0.2, 0.8, 13)]
    report = check_k_integrability(model, grid, [[1.0]], 2)
    assert report.passed
    assert report.flagged == ()
    assert report.values.shape == (13, 1)


def test_check_k_integrability_flags_jumps():
    space = SampleSpace(["a", "b"])

    def grad(xi):
        scale = 100.0 if xi[0] > 0.5 else 0.1
        return np.array([[scale, -scale]])

    model = ParametrizedMeasureModel(
        ParameterDomain(((0.0, 1.0),)),
        space,
        lambda xi: np.array([1.0, 1.0]),
        density_grad=grad,
    )
    report = check_k_integrability(model, [[0.4], [0.6]], [[1.0]], 2)
    assert not report.passed
    assert report.flagged == ((0, 0),)
    assert report.max_jump_at == (0, 0)


def test_check_k_integrability_reports_grid_point_on_domination_failure():
    space = SampleSpace(["a", "b"])
    model = ParametrizedMeasureModel(
        ParameterDomain(((0.0, 1.0),)),
        space,
        lambda xi: np.array([xi[0], 0.0]),
        density_grad=lambda xi: np.array([[1.0, 1.0]]),
    )
    with pytest.raises(DominationError, match="grid point"):
        check_k_integrability(model, [[0.3]], [[1.0]], 2)


# ---------------------------------------------------------------------------
# power paths and tensors
# ---------------------------------------------------------------------------

def test_power_path_oracle():
    model = bernoulli()
    point, velocity = power_path(model, [0.25], [1.0], 2)
    assert point.r == 0.5 and velocity.r == 0.5
    np.testing.assert_allclose(point.coeff, [0.5, math.sqrt(0.75)])
    np.testing.assert_allclose(
        velocity.coeff, [0.5 * 4.0 * 0.5, 0.5 * (-4.0 / 3.0) * math.sqrt(0.75)]
    )
    with pytest.raises(ExponentError):
        power_path(model, [0.25], [1.0], 0.5)


def test_canonical_tensor_validates_exponent():
    model = bernoulli()
    _, v2 = power_path(model, [0.25], [1.0], 2)
    _, v3 = power_path(model, [0.25], [1.0], 3)
    with pytest.raises(ExponentError):
        canonical_tensor(v2, v2, v2)
    with pytest.raises(ExponentError):
        canonical_tensor(v2, v3)


def test_bernoulli_fisher_closed_form():
    model = bernoulli()
    for xi in (0.1, 0.25, 0.5):
        g = fisher_metric(model, [xi]).values
        assert g[0, 0] == pytest.approx(1.0 / (xi * (1.0 - xi)), rel=1e-12)
        # the canonical pairing of the power path computes the same number
        _, v = power_path(model, [xi], [1.0], 2)
        assert canonical_tensor(v, v) == pytest.approx(g[0, 0], rel=1e-12)


def test_bernoulli_cubic_tensor_closed_form():
    model = bernoulli()
    xi = 0.25
    t = amari_chentsov(model, [xi]).values
    expected = 1.0 / xi**2 - 1.0 / (1.0 - xi) ** 2
    assert t[0, 0, 0] == pytest.approx(expected, rel=1e-12)


def test_tau_first_order_vanishes_for_statistical_models():
    model = bernoulli()
    assert tau_n(model, [0.3], [[1.0]]) == pytest.approx(0.0, abs=1e-12)
    assert tau_tensor(model, [0.3], 1).values[0] == pytest.approx(0.0, abs=1e-12)


def test_tau_tensor_order_validation():
    model = bernoulli()
    with pytest.raises(ExponentError):
        tau_tensor(model, [0.3], 0)
    with pytest.raises(ExponentError):
        tau_tensor(model, [0.3], 9)


def test_tensor_value_symmetry_enforced():
    TensorValue(2, [[1.0, 2.0], [2.0, 3.0]])
    with pytest.raises(ContractError):
        TensorValue(2, [[1.0, 2.0], [2.5, 3.0]])
    with pytest.raises(ContractError):
        TensorValue(2, np.ones(4))
    with pytest.raises(ContractError):
        TensorValue(2, np.ones((2, 3)))


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=30, deadline=None)
def test_fisher_matrix_is_positive_semidefinite(seed):
    rng = np.random.default_rng(seed)
    model = exp_family_model(rng, int(rng.integers(2, 8)), int(rng.integers(1, 4)))
    xi = rng.uniform(-0.8, 0.8, size=model.domain.dim)
    g = fisher_metric(model, xi).values
    np.testing.assert_allclose(g, g.T, atol=1e-12)
    assert np.linalg.eigvalsh(g).min() > -1e-10


# ---------------------------------------------------------------------------
# derived models
# ---------------------------------------------------------------------------

def test_normalize_model_quotient_rule():
    rng = np.random.default_rng(11)
    model = exp_family_model(rng, 6, 2)
    norm = normalize_model(model)
    assert norm.statistical
    xi = np.array([0.2, -0.5])
    assert evaluate(norm, xi).total() == pytest.approx(1.0)
    # analytic gradient survives and satisfies the statistical constraint
    assert norm.density_grad is not None
    assert tau_n(norm, xi, [[1.0, 0.0]]) == pytest.approx(0.0, abs=1e-10)
    # quotient-rule gradient agrees with finite differences of the quotient
    blind = ParametrizedMeasureModel(norm.domain, norm.space, norm.density)
    np.testing.assert_allclose(
        mass_gradient(norm, xi), mass_gradient(blind, xi), rtol=1e-6, atol=1e-12
    )


def test_normalize_model_zero_mass():
    space = SampleSpace(["a"])
    model = ParametrizedMeasureModel(
        ParameterDomain(((-1.0, 1.0),)), space, lambda xi: np.array([0.0])
    )
    with pytest.raises(ZeroMassError):
        evaluate(normalize_model(model), [0.0])


def test_induced_model_matches_pushforward():
    rng = np.random.default_rng(5)
    model = exp_family_model(rng, 5, 2, weights=True)
    target = random_space(rng, 3, tag="t")
    k = random_kernel(rng, model.space, target)
    ind = induced_model(model, k)
    xi = np.array([0.4, -0.2])
    np.testing.assert_allclose(
        evaluate(ind, xi).mass, pushforward(k, evaluate(model, xi)).mass
    )
    np.testing.assert_allclose(
        mass_gradient(ind, xi), mass_gradient(model, xi) @ k.rows, atol=1e-12
    )


def test_induced_model_accepts_statistic():
    from igk import Statistic

    model = bernoulli()
    collapse = Statistic(model.space, SampleSpace(["z"]), [0, 0])
    ind = induced_model(model, collapse)
    np.testing.assert_allclose(evaluate(ind, [0.3]).mass, [1.0])
    # everything collapses, so the induced Fisher information vanishes
    assert fisher_metric(ind, [0.3]).values[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_induced_model_respects_target_weights():
    rng = np.random.default_rng(9)
    model = exp_family_model(rng, 4, 1)
    target = SampleSpace(["u", "v"], weights=[0.25, 4.0])
    k = random_kernel(rng, model.space, target)
    ind = induced_model(model, k)
    xi = np.array([0.1])
    # masses are weight times density, so the density must absorb 1/weights
    np.testing.assert_allclose(
        ind.density(xi) * target.base_masses,
        pushforward(k, evaluate(model, xi)).mass,
    )
