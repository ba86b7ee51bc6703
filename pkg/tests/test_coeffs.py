import numpy as np
import pytest

import svekit as sk
from svekit.errors import DegenerateGridError, InvalidParameterError


def test_linear_ou_metadata():
    c = sk.make_builtin_coeffs("linear_ou", [1.0, 1.0])
    assert float(c.mu(0.0, 2.0)) == -2.0
    assert float(c.sigma(0.0, 2.0)) == 1.0
    assert c.lipschitz_const == 1.0
    assert c.xi == 0.5
    assert c.holder_const == 0.0


def test_holder_power_rho_divergence():
    c = sk.make_builtin_coeffs("holder_power", [1.0, 0.0])
    assert float(c.sigma(0.0, 4.0)) == 2.0
    passed, integrals = sk.audit_yw_divergence(c.yw_rho)
    assert passed
    # integral of 1/x gains log(10) per decade
    inc = np.diff(integrals)
    assert np.allclose(inc, np.log(10.0), rtol=1e-6)


def test_holder_power_xi_domain():
    with pytest.raises(InvalidParameterError):
        sk.make_builtin_coeffs("holder_power", [1.0, 0.6])


def test_unknown_family():
    with pytest.raises(InvalidParameterError, match="linear_ou"):
        sk.make_builtin_coeffs("nope", [1.0])


def test_custom_family_redirects():
    with pytest.raises(InvalidParameterError):
        sk.make_builtin_coeffs("custom", [1.0])


def test_localize_clamps():
    c = sk.make_builtin_coeffs("linear_ou", [1.0, 1.0])
    loc = sk.localize(c, 5.0)
    assert float(loc.mu(0.0, 10.0)) == -5.0
    assert float(loc.mu(0.0, -10.0)) == 5.0


def test_localize_identity_inside_ball():
    c = sk.make_builtin_coeffs("holder_power", [1.0, 0.25])
    loc = sk.localize(c, 4.0)
    x = np.linspace(-4.0, 4.0, 1000)
    assert np.array_equal(np.asarray(loc.sigma(0.0, x)),
                          np.asarray(c.sigma(0.0, x)))


def test_localize_sqrt_boundary():
    c = sk.make_builtin_coeffs("holder_power", [1.0, 0.0])
    loc = sk.localize(c, 4.0)
    assert float(loc.sigma(0.0, 9.0)) == 2.0


def test_localize_composition():
    c = sk.make_builtin_coeffs("linear_ou", [2.0, 1.0])
    x = np.linspace(-20, 20, 401)
    a = sk.localize(sk.localize(c, 7.0), 3.0)
    b = sk.localize(c, 3.0)
    assert np.array_equal(np.asarray(a.mu(0.0, x)), np.asarray(b.mu(0.0, x)))


def test_holder_modulus_sqrt_oracle():
    f = lambda t, x: np.sqrt(np.abs(x))
    grid = np.array([0.0, 0.25, 1.0, 2.0])
    # brute force over pairs: the pair (0, 1) attains ratio 1
    assert sk.estimate_holder_modulus(f, 0.5, [0.0], grid) == pytest.approx(1.0)


def test_holder_modulus_constant_zero():
    f = lambda t, x: np.zeros_like(np.asarray(x, float)) + 3.0
    assert sk.estimate_holder_modulus(f, 0.7, [0.0, 1.0], [0.0, 0.5, 1.0]) == 0.0


def test_holder_modulus_linear():
    f = lambda t, x: 2.0 * np.asarray(x, float)
    assert sk.estimate_holder_modulus(f, 1.0, [0.0], [0.0, 0.3, 1.0]) == pytest.approx(2.0)


def test_holder_modulus_degenerate_grid():
    with pytest.raises(DegenerateGridError):
        sk.estimate_holder_modulus(lambda t, x: x, 0.5, [0.0], [1.0, 1.0])


def test_holder_modulus_order_monotonicity():
    f = lambda t, x: np.sqrt(np.abs(x))
    x_grid = np.linspace(0.0, 1.0, 9)  # pair distances <= 1
    m_small = sk.estimate_holder_modulus(f, 0.25, [0.0], x_grid)
    m_large = sk.estimate_holder_modulus(f, 0.5, [0.0], x_grid)
    assert m_small >= m_large


@pytest.mark.parametrize("family,params", [
    ("linear_ou", [1.0, 1.0]),
    ("holder_power", [1.0, 0.0]),
    ("holder_power", [2.0, 0.5]),
    ("constant_sigma", [1.0, 2.0]),
])
def test_builtin_modulus_within_declared(family, params):
    c = sk.make_builtin_coeffs(family, params)
    x_grid = np.linspace(-3.0, 3.0, 25)
    measured = sk.estimate_holder_modulus(c.sigma, 0.5 + c.xi, [0.0, 0.5], x_grid)
    assert measured <= c.holder_const * (1 + 1e-9) + (0.0 if c.holder_const else 1e-12)


def test_linear_growth_ou():
    c = sk.make_builtin_coeffs("linear_ou", [1.0, 1.0])
    passed, worst = sk.check_linear_growth(c, [0.0], [0.0, 1.0, 5.0])
    assert passed
    assert worst <= c.growth_const + 1e-12


def test_linear_growth_quadratic_fails():
    c = sk.CoefficientPair(mu=lambda t, x: np.asarray(x, float) ** 2,
                           sigma=lambda t, x: np.asarray(x, float) * 0.0,
                           growth_const=1.0)
    x_grid = np.linspace(0.0, 10.0, 21)
    passed, worst = sk.check_linear_growth(c, [0.0], x_grid)
    assert not passed
    assert worst == pytest.approx(100.0 / 11.0, rel=1e-9)


def test_linear_growth_sqrt_passes():
    c = sk.make_builtin_coeffs("holder_power", [1.0, 0.0])
    passed, _ = sk.check_linear_growth(c, [0.0], np.linspace(-10, 10, 101))
    assert passed


def test_yw_divergence_rejects_subcritical():
    # order 0.4 is below the square-root threshold: the integral converges
    passed, _ = sk.audit_yw_divergence(lambda x: x ** 0.4)
    assert not passed


def test_osgood_audit_lipschitz_case():
    out = sk.audit_osgood_divergence(lambda u: u, alpha=0.25)
    assert all(passed for passed, _ in out.values())


def test_rho_validation():
    with pytest.raises(InvalidParameterError):
        sk.CoefficientPair(mu=lambda t, x: 0.0 * np.asarray(x),
                           sigma=lambda t, x: 0.0 * np.asarray(x),
                           growth_const=1.0,
                           yw_rho=lambda u: 1.0 + np.asarray(u, float))


def test_initial_condition_rejects_jump():
    step = lambda t: np.where(np.asarray(t) < 0.5, 0.0, 1.0)
    with pytest.raises(InvalidParameterError):
        sk.InitialCondition(x0=step, holder_beta_claim=0.5)


def test_initial_condition_holder_claim_domain():
    with pytest.raises(InvalidParameterError):
        sk.InitialCondition(x0=0.0, holder_beta_claim=1.5)
