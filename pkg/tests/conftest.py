import numpy as np
import pytest

import svekit as sk


@pytest.fixture
def const_kernel():
    return sk.make_builtin_kernel("constant", [1.0], 1.0)


@pytest.fixture
def exp_kernel():
    return sk.make_builtin_kernel("exponential_convolution", [2.0], 1.0)


@pytest.fixture
def ou_coeffs():
    return sk.make_builtin_coeffs("linear_ou", [1.0, 1.0])


@pytest.fixture
def unit_x0():
    return sk.constant_initial(1.0)


@pytest.fixture
def zero_x0():
    return sk.constant_initial(0.0)


def reference_euler_maruyama(mu, sigma, x0, times, increments):
    """Plain Euler--Maruyama, coded independently of the scheme engine.

    Keeps separate drift and diffusion accumulators; algebraically the
    classical x += mu dt + sigma dB recursion, with the summation
    grouped as x0 + (sum mu dt) + (sum sigma dB).
    """
    dt = times[1] - times[0]
    x = float(x0)
    drift = 0.0
    diff = 0.0
    out = [x]
    for i in range(len(increments)):
        drift += float(mu(times[i], x)) * dt
        diff += float(sigma(times[i], x)) * increments[i]
        x = (float(x0) + drift) + diff
        out.append(x)
    return np.array(out)


def coupled_ensembles(k_mu, k_sigma, c, x0, base_seed, n_paths, levels, cfg,
                      horizon=1.0):
    """Ensembles at several levels sharing one driver realization per path."""
    from svekit.noise import restrict_increments
    from svekit.scheme import (BATCH_SIZE, EnsembleResult,
                               driver_increment_matrix,
                               simulate_from_increments)
    finest_level = max(levels)
    finest = sk.DyadicGrid(horizon=horizon, level=finest_level)
    grids = {lv: sk.DyadicGrid(horizon=horizon, level=lv) for lv in levels}
    values = {lv: np.empty((n_paths, grids[lv].n_steps + 1)) for lv in levels}
    for lo in range(0, n_paths, BATCH_SIZE):
        hi = min(lo + BATCH_SIZE, n_paths)
        dB = driver_increment_matrix(base_seed, finest, lo, hi - lo)
        for lv in levels:
            inc = restrict_increments(dB, finest_level - lv)
            v, _, _ = simulate_from_increments(k_mu, k_sigma, c, x0,
                                               grids[lv], inc, cfg, lo)
            values[lv][lo:hi] = v
    return {lv: EnsembleResult(grid=grids[lv], base_seed=base_seed,
                               values=values[lv]) for lv in levels}
