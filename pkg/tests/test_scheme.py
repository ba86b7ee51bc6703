import numpy as np
import pytest

import svekit as sk
from svekit.errors import (IncompatibleGridError, InvalidParameterError,
                           NonFiniteValueError, NotConvolutionError)
from svekit.scheme import _ConvolutionWeights, _GenericWeights

from conftest import coupled_ensembles, reference_euler_maruyama


def test_deterministic_unit_drift(const_kernel, zero_x0):
    # sigma = 0, K_mu = 1, mu = 1: the path is exactly X_t = t
    c = sk.make_builtin_coeffs("constant_sigma", [1.0, 0.0])
    grid = sk.DyadicGrid(horizon=1.0, level=7)
    d = sk.sample_driver(1, grid)
    p = sk.simulate_path(const_kernel, const_kernel, c, zero_x0, d, grid)
    assert np.array_equal(p.values, grid.times())


def test_pure_brownian_partial_sums(const_kernel, zero_x0):
    c = sk.make_builtin_coeffs("constant_sigma", [0.0, 1.0])
    grid = sk.DyadicGrid(horizon=1.0, level=8)
    d = sk.sample_driver(17, grid)
    p = sk.simulate_path(const_kernel, const_kernel, c, zero_x0, d, grid)
    expected = np.concatenate([[0.0], np.add.accumulate(d.increments)])
    assert np.array_equal(p.values, expected)


@pytest.mark.parametrize("seed", range(12))
def test_bit_equality_with_euler_maruyama(const_kernel, seed):
    rng = np.random.default_rng(seed)
    family = rng.choice(["linear_ou", "holder_power", "constant_sigma"])
    if family == "linear_ou":
        c = sk.make_builtin_coeffs(family, [rng.uniform(0.1, 2.0),
                                            rng.uniform(0.1, 1.5)])
        x0v = rng.uniform(-1.0, 2.0)
    elif family == "holder_power":
        c = sk.make_builtin_coeffs(family, [rng.uniform(0.2, 1.5),
                                            rng.uniform(0.0, 0.5)])
        x0v = rng.uniform(0.5, 2.0)
    else:
        c = sk.make_builtin_coeffs(family, [rng.uniform(-1, 1),
                                            rng.uniform(0.1, 1.0)])
        x0v = rng.uniform(-1.0, 2.0)
    x0 = sk.constant_initial(x0v)
    grid = sk.DyadicGrid(horizon=1.0, level=7)
    d = sk.sample_driver(int(rng.integers(0, 2 ** 31)), grid)
    p = sk.simulate_path(const_kernel, const_kernel, c, x0, d, grid)
    ref = reference_euler_maruyama(c.mu, c.sigma, x0v, grid.times(),
                                   d.increments)
    assert np.array_equal(p.values, ref)


def test_ensemble_singleton_matches_path(const_kernel, ou_coeffs, unit_x0):
    grid = sk.DyadicGrid(horizon=1.0, level=6)
    cfg = sk.SchemeConfig()
    ens = sk.simulate_ensemble(const_kernel, const_kernel, ou_coeffs, unit_x0,
                               grid, cfg, base_seed=9, n_paths=1)
    d = sk.sample_driver(9, grid)
    p = sk.simulate_path(const_kernel, const_kernel, ou_coeffs, unit_x0, d,
                         grid, cfg)
    assert np.array_equal(ens.values[0], p.values)


def test_ensemble_worker_count_invariance(exp_kernel, ou_coeffs, unit_x0):
    grid = sk.DyadicGrid(horizon=1.0, level=6)
    cfg = sk.SchemeConfig(store_aux=True)
    runs = [sk.simulate_ensemble(exp_kernel, exp_kernel, ou_coeffs, unit_x0,
                                 grid, cfg, 5, 700, workers=w)
            for w in (1, 3, 8)]
    for other in runs[1:]:
        assert np.array_equal(runs[0].values, other.values)
        assert np.array_equal(runs[0].aux_y, other.aux_y)
    m0, m1 = runs[0].moments, runs[1].moments
    assert np.array_equal(m0.mean, m1.mean)
    assert np.array_equal(m0.sums[8], m1.sums[8])


def test_convolution_fast_path_bit_identical(exp_kernel, ou_coeffs, unit_x0):
    grid = sk.DyadicGrid(horizon=1.0, level=8)
    d = sk.sample_driver(3, grid)
    fast = sk.simulate_path(exp_kernel, exp_kernel, ou_coeffs, unit_x0, d,
                            grid, sk.SchemeConfig(convolution_fast=True))
    generic = sk.simulate_path(exp_kernel, exp_kernel, ou_coeffs, unit_x0, d,
                               grid, sk.SchemeConfig(convolution_fast=False))
    assert np.array_equal(fast.values, generic.values)


def test_convolution_fast_path_averaged_mode(exp_kernel, ou_coeffs, unit_x0):
    grid = sk.DyadicGrid(horizon=1.0, level=6)
    d = sk.sample_driver(3, grid)
    cfg = dict(kernel_quadrature="averaged", quadrature_nodes=4)
    fast = sk.simulate_path(exp_kernel, exp_kernel, ou_coeffs, unit_x0, d,
                            grid, sk.SchemeConfig(convolution_fast=True, **cfg))
    generic = sk.simulate_path(exp_kernel, exp_kernel, ou_coeffs, unit_x0, d,
                               grid, sk.SchemeConfig(convolution_fast=False, **cfg))
    assert np.array_equal(fast.values, generic.values)


def test_convolution_table_constant(const_kernel):
    grid = sk.DyadicGrid(horizon=1.0, level=4)
    table = sk.convolution_fast_weights(const_kernel, grid, sk.SchemeConfig())
    assert np.all(table.lag_weights[1:] == 1.0)
    assert table.mu_weight(3) == grid.dt


def test_convolution_table_requires_convolution():
    k = sk.make_builtin_kernel("smooth_bivariate", [1.0, 0.5, 1.0], 1.0)
    grid = sk.DyadicGrid(horizon=1.0, level=4)
    with pytest.raises(NotConvolutionError):
        sk.convolution_fast_weights(k, grid, sk.SchemeConfig())


def test_fractional_kernel_runs_finite(const_kernel, zero_x0):
    kf = sk.make_builtin_kernel("fractional", [0.4], 1.0)
    c = sk.make_builtin_coeffs("constant_sigma", [0.0, 1.0])
    grid = sk.DyadicGrid(horizon=1.0, level=8)
    d = sk.sample_driver(10, grid)
    with pytest.warns(sk.errors.AssumptionWarning):
        p = sk.simulate_path(const_kernel, kf, c, zero_x0, d, grid)
    assert np.isfinite(p.values).all()


def test_linearity_probe(const_kernel, zero_x0):
    # time-dependent sigma, no state feedback: doubling sigma doubles X - x0
    c1 = sk.coeffs_from_expressions("0*x", "1 + 0.5*sin(t) + 0*x",
                                    growth_const=2.0)
    c2 = sk.coeffs_from_expressions("0*x", "2*(1 + 0.5*sin(t) + 0*x)",
                                    growth_const=4.0)
    grid = sk.DyadicGrid(horizon=1.0, level=7)
    d = sk.sample_driver(8, grid)
    p1 = sk.simulate_path(const_kernel, const_kernel, c1, zero_x0, d, grid)
    p2 = sk.simulate_path(const_kernel, const_kernel, c2, zero_x0, d, grid)
    assert np.array_equal(2.0 * p1.values, p2.values)


def test_grid_coupled_refinement_decreases(const_kernel, ou_coeffs, unit_x0):
    cfg = sk.SchemeConfig()
    for seed in (0, 1, 2):
        ens = coupled_ensembles(const_kernel, const_kernel, ou_coeffs,
                                unit_x0, seed, 1, list(range(4, 10)), cfg)
        sups = []
        for lv in range(4, 9):
            fine = ens[lv + 1].values[0][::2]
            sups.append(np.max(np.abs(fine - ens[lv].values[0])))
        drops = sum(b < a for a, b in zip(sups, sups[1:]))
        assert drops >= 4


def test_averaged_weights_converge_to_left_point(exp_kernel):
    prev = None
    for level in (4, 6, 8):
        grid = sk.DyadicGrid(horizon=1.0, level=level)
        t = grid.times()
        left = _GenericWeights(exp_kernel, t, sk.SchemeConfig())
        avg = _GenericWeights(exp_kernel, t,
                              sk.SchemeConfig(kernel_quadrature="averaged"))
        worst = 0.0
        n = grid.n_steps
        wl = np.empty(n)
        wa = np.empty(n)
        for j in (n // 2, n):
            left.row(j, wl)
            avg.row(j, wa)
            worst = max(worst, np.max(np.abs(wa[:j] - wl[:j])))
        # sigma-type weights differ by O(dt); mu-type weights carry an
        # extra dt factor, so this is also max |W_mu_avg - W_mu_left| / dt
        if prev is not None:
            assert worst < 0.5 * prev
        prev = worst


def test_non_finite_error_diagnostics(const_kernel):
    c = sk.coeffs_from_expressions("x^3", "0*x", growth_const=1.0)
    x0 = sk.constant_initial(10.0)
    grid = sk.DyadicGrid(horizon=1.0, level=4)
    d = sk.sample_driver(0, grid)
    with pytest.raises(NonFiniteValueError) as err:
        sk.simulate_path(const_kernel, const_kernel, c, x0, d, grid)
    assert err.value.step >= 1
    assert err.value.partial.shape == (err.value.step + 1,)


def test_incompatible_grid_rejected(const_kernel, ou_coeffs, unit_x0):
    d = sk.sample_driver(0, sk.DyadicGrid(horizon=1.0, level=4))
    fine = sk.DyadicGrid(horizon=1.0, level=6)
    with pytest.raises(IncompatibleGridError):
        sk.simulate_path(const_kernel, const_kernel, ou_coeffs, unit_x0, d,
                         fine)


def test_scheme_config_validation():
    with pytest.raises(InvalidParameterError):
        sk.SchemeConfig(kernel_quadrature="midpoint")
    with pytest.raises(InvalidParameterError):
        sk.SchemeConfig(quadrature_nodes=0)


def test_csv_export(tmp_path, const_kernel, ou_coeffs, unit_x0):
    grid = sk.DyadicGrid(horizon=1.0, level=3)
    d = sk.sample_driver(2, grid)
    p = sk.simulate_path(const_kernel, const_kernel, ou_coeffs, unit_x0, d,
                         grid, sk.SchemeConfig(store_aux=True))
    out = tmp_path / "path.csv"
    p.to_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,x,y,z"
    assert len(lines) == grid.n_steps + 2
    # 17 significant digits round-trip exactly
    back = np.loadtxt(out, delimiter=",", skiprows=1)
    assert np.array_equal(back[:, 1], p.values)


def test_aux_arrays_are_prefix_sums(const_kernel, ou_coeffs, unit_x0):
    grid = sk.DyadicGrid(horizon=1.0, level=5)
    d = sk.sample_driver(6, grid)
    p = sk.simulate_path(const_kernel, const_kernel, ou_coeffs, unit_x0, d,
                         grid, sk.SchemeConfig(store_aux=True))
    t = grid.times()
    sig = np.asarray(ou_coeffs.sigma(t[:-1], p.values[:-1]))
    mu = np.asarray(ou_coeffs.mu(t[:-1], p.values[:-1]))
    assert p.aux_y[0] == 0.0
    assert np.allclose(np.diff(p.aux_y), sig * d.increments, rtol=0, atol=1e-15)
    assert np.allclose(np.diff(p.aux_z), mu * grid.dt, rtol=0, atol=1e-15)
