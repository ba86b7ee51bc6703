import numpy as np
import pytest

import svekit as sk
from svekit.errors import InvalidParameterError


def test_basic_arithmetic():
    f = sk.compile_expression("2 * x + t - 1", ("t", "x"))
    assert f(1.0, 3.0) == 6.0


def test_caret_power():
    f = sk.compile_expression("x^2 + 1", ("t", "x"))
    assert f(0.0, 3.0) == 10.0


def test_functions_vectorize():
    f = sk.compile_expression("sqrt(abs(x)) * exp(-t)", ("t", "x"))
    x = np.array([-4.0, 9.0])
    assert np.allclose(f(0.0, x), [2.0, 3.0])


def test_min_max_binary():
    f = sk.compile_expression("min(x, 1) + max(x, 2)", ("t", "x"))
    assert f(0.0, 5.0) == 1.0 + 5.0


def test_unary_minus():
    f = sk.compile_expression("-x", ("t", "x"))
    assert f(0.0, 2.5) == -2.5


def test_unknown_variable_rejected():
    with pytest.raises(InvalidParameterError, match="unknown variable"):
        sk.compile_expression("x + y", ("t", "x"))


def test_unknown_function_rejected():
    with pytest.raises(InvalidParameterError):
        sk.compile_expression("cos(x)", ("t", "x"))


def test_attribute_access_rejected():
    with pytest.raises(InvalidParameterError):
        sk.compile_expression("x.real", ("t", "x"))


def test_syntax_error_reports_position():
    with pytest.raises(InvalidParameterError, match="line 1"):
        sk.compile_expression("x + * 2", ("t", "x"))


def test_coeffs_from_expressions_simulate():
    c = sk.coeffs_from_expressions("-x", "1 + 0*x", growth_const=2.0,
                                   lipschitz_const=1.0, holder_const=0.0)
    assert float(c.mu(0.0, 2.0)) == -2.0
    assert float(c.sigma(0.0, 2.0)) == 1.0
