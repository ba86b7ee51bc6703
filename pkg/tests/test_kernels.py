import math

import numpy as np
import pytest

import svekit as sk
from svekit.errors import (DomainError, InvalidParameterError,
                           MissingDerivativeError)


def test_eval_constant(const_kernel):
    assert sk.eval_kernel(const_kernel, 0.3, 0.7) == 1.0


def test_eval_exponential_closed_form(exp_kernel):
    assert sk.eval_kernel(exp_kernel, 0.5, 1.0) == pytest.approx(math.exp(-1.0),
                                                                 rel=1e-12)


@pytest.mark.parametrize("s,t", [(0.7, 0.3), (-0.1, 0.5), (0.5, 1.5)])
def test_eval_domain_errors(const_kernel, s, t):
    with pytest.raises(DomainError):
        sk.eval_kernel(const_kernel, s, t)


def test_eval_deterministic(exp_kernel):
    a = sk.eval_kernel(exp_kernel, 0.25, 0.75)
    b = sk.eval_kernel(exp_kernel, 0.25, 0.75)
    assert a == b


def test_constant_family_metadata(const_kernel):
    assert const_kernel.diag_lower_bound == 1.0
    assert const_kernel.is_convolution
    assert float(const_kernel.d1(0.2, 0.5)) == 0.0
    assert float(const_kernel.d2(0.2, 0.5)) == 0.0
    assert float(const_kernel.d21(0.2, 0.5)) == 0.0


def test_exponential_family_derivative():
    k = sk.make_builtin_kernel("exponential_convolution", [2.0], 1.0)
    assert float(k.d2(0.3, 0.8)) == pytest.approx(-2.0 * math.exp(-2.0 * 0.5),
                                                  rel=1e-12)
    assert k.diag_lower_bound == 1.0


def test_fractional_flagged_irregular():
    k = sk.make_builtin_kernel("fractional", [0.3], 1.0)
    assert not k.regular
    assert k.diag_lower_bound == 0.0
    # diagonal blows up for H < 1/2
    assert not np.isfinite(float(k.eval_fn(0.5, 0.5)))


def test_fractional_parameter_domain():
    with pytest.raises(InvalidParameterError):
        sk.make_builtin_kernel("fractional", [1.5], 1.0)


def test_unknown_family():
    with pytest.raises(InvalidParameterError, match="constant"):
        sk.make_builtin_kernel("gauss", [1.0], 1.0)


def test_kernelspec_metadata_domains(const_kernel):
    with pytest.raises(InvalidParameterError):
        sk.KernelSpec(eval_fn=const_kernel.eval_fn,
                      triangle=const_kernel.triangle, gamma=0.7)
    with pytest.raises(InvalidParameterError):
        sk.KernelSpec(eval_fn=const_kernel.eval_fn,
                      triangle=const_kernel.triangle, alpha=0.5)


@pytest.mark.parametrize("family,params", [
    ("constant", [2.0]),
    ("exponential_convolution", [2.0]),
    ("smooth_bivariate", [1.0, 0.5, 2.0]),
    ("fractional", [0.4]),
])
def test_finite_differences_match_derivatives(family, params):
    k = sk.make_builtin_kernel(family, params, 1.0)
    rng = np.random.default_rng(11)
    h = 1e-5
    checked = 0
    while checked < 100:
        s = rng.uniform(0.05, 0.85)
        t = rng.uniform(s + 0.05, 0.95)
        # keep the step inside the triangle and away from the diagonal
        fd1 = (float(k.eval_fn(s + h, t)) - float(k.eval_fn(s - h, t))) / (2 * h)
        fd2 = (float(k.eval_fn(s, t + h)) - float(k.eval_fn(s, t - h))) / (2 * h)
        d1 = float(k.d1(s, t))
        d2 = float(k.d2(s, t))
        scale1 = max(abs(d1), 1e-9)
        scale2 = max(abs(d2), 1e-9)
        assert abs(fd1 - d1) / scale1 <= 1e-6
        assert abs(fd2 - d2) / scale2 <= 1e-6
        checked += 1


def test_convolution_shift_invariance(exp_kernel):
    # dyadic points keep t - s bit-exact under the shift
    rng = np.random.default_rng(5)
    for _ in range(200):
        i, j, m = sorted(rng.integers(0, 64, size=3))
        s, t, h = i / 64, j / 64, m / 64
        if t + h > 1.0:
            continue
        assert (sk.eval_kernel(exp_kernel, s, t)
                == sk.eval_kernel(exp_kernel, s + h, t + h))


def test_audit_constant_all_pass(const_kernel):
    rep = sk.audit_assumption_kernels(const_kernel, const_kernel, 32)
    assert rep.passed
    holder = rep.check("sigma_holder_integral")
    # differences of a constant vanish, the fitted constant is zero
    assert holder.margin >= 0


def test_audit_exponential_passes(const_kernel, exp_kernel):
    rep = sk.audit_assumption_kernels(const_kernel, exp_kernel, 64)
    assert rep.passed


def test_audit_fractional_fails_diagonal(const_kernel):
    kf = sk.make_builtin_kernel("fractional", [0.3], 1.0)
    rep = sk.audit_assumption_kernels(const_kernel, kf, 32)
    assert not rep.passed
    diag = rep.check("sigma_diagonal_lower_bound")
    assert not diag.passed
    assert diag.margin == float("-inf")


def test_audit_missing_derivative(const_kernel):
    bare = sk.KernelSpec(eval_fn=const_kernel.eval_fn,
                         triangle=const_kernel.triangle)
    with pytest.raises(MissingDerivativeError):
        sk.audit_assumption_kernels(bare, const_kernel, 16)


def test_audit_deterministic(const_kernel, exp_kernel):
    a = sk.audit_assumption_kernels(const_kernel, exp_kernel, 16)
    b = sk.audit_assumption_kernels(const_kernel, exp_kernel, 16)
    assert a.to_json_dict() == b.to_json_dict()


@pytest.mark.parametrize("family,params", [
    ("constant", [1.0]),
    ("exponential_convolution", [2.0]),
    ("smooth_bivariate", [1.0, 0.5, 2.0]),
])
def test_audit_resolution_monotonicity(const_kernel, family, params):
    k = sk.make_builtin_kernel(family, params, 1.0)
    fine = sk.audit_assumption_kernels(const_kernel, k, 32)
    coarse = sk.audit_assumption_kernels(const_kernel, k, 16)
    assert fine.passed
    assert coarse.passed


def test_audit_report_serializes(const_kernel, exp_kernel):
    rep = sk.audit_assumption_kernels(const_kernel, exp_kernel, 16)
    doc = rep.to_json_dict()
    assert doc["schema"] == "kernel-audit-v1"
    for entry in doc["checks"]:
        assert set(entry) == {"condition", "passed", "margin", "witness"}
        assert len(entry["witness"]) == 2


def test_triangle_membership():
    tri = sk.Triangle(horizon=2.0)
    assert tri.contains(0.5, 1.5)
    assert not tri.contains(1.5, 0.5)
    assert not tri.contains(0.5, 2.5)
