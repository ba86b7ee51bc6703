"""Euler-type scheme for stochastic Volterra equations.

State is frozen at the left grid point while kernels and explicit time
dependence stay exact, so each step j needs the kernel row K(., t_j)
against the whole history: O(n^2) kernel work per path.  The inner
reduction runs in the compiled core (or its bit-identical numpy fallback)
in strict left-to-right order, which makes every downstream statistic
reproducible across worker counts and backends.

The exact sub-interval stochastic integral of the kernel against the
driver is not implementable from increments alone; it is replaced by a
per-step weight times the increment, with two modes:

* ``left_point``  W_sigma = K(t_i, t_j), the classical choice
* ``averaged``    W_sigma = (1/dt) * int_{t_i}^{t_i+dt} K(s, t_j) ds by
  composite midpoint quadrature, which reduces kernel-quadrature bias

The discrepancy between the modes under a shared driver doubles as the
empirical uniqueness probe in the analysis module.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._accel import weighted_state_update
from .accumulators import RunningMoments
from .coeffs import CoefficientPair, InitialCondition
from .errors import (AssumptionWarning, IncompatibleGridError,
                     InvalidParameterError, NonFiniteValueError,
                     NotConvolutionError)
from .kernels import KernelSpec
from .noise import BrownianDriver, DyadicGrid, restrict, sample_driver

QUADRATURE_MODES = ("left_point", "averaged")

# paths per processing block; fixed so results never depend on worker count
BATCH_SIZE = 256


@dataclass(frozen=True)
class SchemeConfig:
    kernel_quadrature: str = "left_point"
    quadrature_nodes: int = 4
    store_aux: bool = False
    # None selects the lag-table fast path automatically for convolution
    # kernels; True/False force it (used by the coupling control test)
    convolution_fast: Optional[bool] = None

    def __post_init__(self):
        if self.kernel_quadrature not in QUADRATURE_MODES:
            raise InvalidParameterError(
                f"kernel_quadrature must be one of {QUADRATURE_MODES}")
        if self.quadrature_nodes < 1:
            raise InvalidParameterError("quadrature_nodes must be >= 1")


@dataclass(frozen=True)
class PathSample:
    """One realized path on a grid, plus the auxiliary running integrals.

    ``aux_y`` holds the running diffusion sums, ``aux_z`` the running drift
    sums, and ``x0_values`` the initial curve on the grid; all three are
    stored only under ``store_aux`` and feed the decomposition analysis.
    """

    grid: DyadicGrid
    values: np.ndarray
    aux_y: Optional[np.ndarray] = None
    aux_z: Optional[np.ndarray] = None
    x0_values: Optional[np.ndarray] = None
    driver_seed: int = 0

    def to_csv(self, path) -> None:
        t = self.grid.times()
        cols = [t, self.values]
        header = "t,x"
        if self.aux_y is not None and self.aux_z is not None:
            cols += [self.aux_y, self.aux_z]
            header = "t,x,y,z"
        data = np.column_stack(cols)
        np.savetxt(path, data, delimiter=",", header=header, comments="",
                   fmt="%.17g")


def _array_eval(kernel: KernelSpec):
    """Kernel evaluation handle that accepts array arguments."""
    fn = kernel.eval_fn
    T = kernel.triangle.horizon
    try:
        probe = fn(np.array([0.0, T * 0.25]), T * 0.5)
        if np.asarray(probe).shape == (2,):
            return fn
    except Exception:
        pass
    return np.vectorize(fn, otypes=[float])


class _GenericWeights:
    """Kernel row weights computed on the fly; O(n^2) evals, O(n) memory."""

    def __init__(self, kernel: KernelSpec, times: np.ndarray, cfg: SchemeConfig):
        self.eval_fn = _array_eval(kernel)
        self.t = times
        self.averaged = cfg.kernel_quadrature == "averaged"
        if self.averaged:
            q = cfg.quadrature_nodes
            dt = times[1] - times[0]
            offsets = (np.arange(q) + 0.5) * (dt / q)
            self.nodes = times[:-1, None] + offsets[None, :]

    def row(self, j: int, out: np.ndarray) -> None:
        if self.averaged:
            out[:j] = np.asarray(self.eval_fn(self.nodes[:j], self.t[j]),
                                 float).mean(axis=1)
        else:
            out[:j] = self.eval_fn(self.t[:j], self.t[j])


class _ConvolutionWeights:
    """Lag-indexed weight table: n entries instead of n^2 / 2 evaluations."""

    def __init__(self, kernel: KernelSpec, times: np.ndarray, cfg: SchemeConfig):
        if not kernel.is_convolution:
            raise NotConvolutionError(
                f"kernel {kernel.name!r} is not of convolution type")
        profile = kernel.convolution_profile
        lags = times[1:]
        if cfg.kernel_quadrature == "averaged":
            q = cfg.quadrature_nodes
            dt = times[1] - times[0]
            offsets = (np.arange(q) + 0.5) * (dt / q)
            table = np.asarray(profile(lags[:, None] - offsets[None, :]),
                               float).mean(axis=1)
        else:
            table = np.asarray(profile(lags), float)
        # entry ell = weight at lag ell; index 0 unused (sums stop at i < j)
        self.table = np.concatenate([[np.nan], table])

    def row(self, j: int, out: np.ndarray) -> None:
        out[:j] = self.table[j:0:-1]


@dataclass(frozen=True)
class ConvolutionWeightTable:
    """Public view of the lag table (sigma-type weights, lags 1..n)."""

    lag_weights: np.ndarray
    dt: float

    def mu_weight(self, lag: int) -> float:
        return float(self.lag_weights[lag] * self.dt)

    def sigma_weight(self, lag: int) -> float:
        return float(self.lag_weights[lag])


def convolution_fast_weights(k: KernelSpec, grid: DyadicGrid,
                             cfg: SchemeConfig) -> ConvolutionWeightTable:
    """Precompute the lag-indexed weight table for a convolution kernel.

    The table reproduces the generic route exactly: simulations through
    either route give bit-identical paths when the grid arithmetic is
    exact (dyadic step counts).
    """
    prov = _ConvolutionWeights(k, grid.times(), cfg)
    return ConvolutionWeightTable(lag_weights=prov.table, dt=grid.dt)


def _make_provider(kernel: KernelSpec, times: np.ndarray, cfg: SchemeConfig):
    use_fast = (kernel.is_convolution if cfg.convolution_fast is None
                else cfg.convolution_fast)
    if use_fast:
        return _ConvolutionWeights(kernel, times, cfg)
    return _GenericWeights(kernel, times, cfg)


def _warn_irregular(*kernels: KernelSpec) -> list:
    notes = []
    for k in kernels:
        if not k.regular:
            msg = (f"kernel {k.name!r} is outside the audited regularity "
                   "class; results carry no regularity guarantee")
            warnings.warn(msg, AssumptionWarning, stacklevel=3)
            notes.append(msg)
    return notes


def _run_block(prov_mu, prov_sig, c: CoefficientPair, x0_vals: np.ndarray,
               times: np.ndarray, dt: float, dB: np.ndarray,
               store_aux: bool, path_offset: int):
    """Advance a block of paths through the full recursion.

    dB is (paths, n) with one driver row per path.  Returns values of
    shape (paths, n + 1) and, when requested, the running integrals
    Y = sum sigma dB and Z = sum mu dt.
    """
    n_paths, n = dB.shape
    values = np.empty((n_paths, n + 1))
    values[:, 0] = x0_vals[0]
    mu_vals = np.zeros((n_paths, n))
    sd_vals = np.zeros((n_paths, n))
    w_mu = np.empty(n)
    w_sig = np.empty(n)
    out = np.empty(n_paths)
    for j in range(1, n + 1):
        i = j - 1
        x_prev = values[:, i]
        mu_vals[:, i] = c.mu(times[i], x_prev)
        sd_vals[:, i] = c.sigma(times[i], x_prev) * dB[:, i]
        prov_mu.row(j, w_mu)
        prov_sig.row(j, w_sig)
        np.multiply(w_mu, dt, out=w_mu)
        weighted_state_update(w_mu[:j], w_sig[:j], mu_vals, sd_vals, j,
                              x0_vals[j], out)
        finite = np.isfinite(out)
        if not finite.all():
            bad = int(np.argmin(finite))
            values[:, j] = out
            raise NonFiniteValueError(step=j, path=path_offset + bad,
                                      partial=values[bad, :j + 1].copy())
        values[:, j] = out
    aux_y = aux_z = None
    if store_aux:
        aux_y = np.zeros((n_paths, n + 1))
        aux_z = np.zeros((n_paths, n + 1))
        np.cumsum(sd_vals, axis=1, out=aux_y[:, 1:])
        np.cumsum(mu_vals * dt, axis=1, out=aux_z[:, 1:])
    return values, aux_y, aux_z


def _prepare(k_mu: KernelSpec, k_sigma: KernelSpec, c: CoefficientPair,
             x0: InitialCondition, grid: DyadicGrid, cfg: SchemeConfig):
    T = grid.horizon
    for k in (k_mu, k_sigma):
        if k.triangle.horizon != T:
            raise IncompatibleGridError(
                f"kernel horizon {k.triangle.horizon} differs from grid horizon {T}")
    times = grid.times()
    x0_vals = np.asarray(x0.x0(times), float)
    if not np.isfinite(x0_vals).all():
        raise InvalidParameterError("x0 is non-finite on the grid")
    prov_mu = _make_provider(k_mu, times, cfg)
    prov_sig = _make_provider(k_sigma, times, cfg)
    return times, x0_vals, prov_mu, prov_sig


def simulate_from_increments(k_mu: KernelSpec, k_sigma: KernelSpec,
                             c: CoefficientPair, x0: InitialCondition,
                             grid: DyadicGrid, increments: np.ndarray,
                             cfg: SchemeConfig, path_offset: int = 0):
    """Run the scheme for a block of externally supplied increment rows.

    This is the coupling entry point: analyses that share one driver
    realization across grids or scheme variants restrict the increments
    themselves and call this directly.
    """
    increments = np.ascontiguousarray(increments, dtype=float)
    if increments.ndim == 1:
        increments = increments[None, :]
    if increments.shape[1] != grid.n_steps:
        raise IncompatibleGridError(
            f"{increments.shape[1]} increments for a grid of {grid.n_steps} steps")
    times, x0_vals, prov_mu, prov_sig = _prepare(k_mu, k_sigma, c, x0, grid, cfg)
    return _run_block(prov_mu, prov_sig, c, x0_vals, times, grid.dt,
                      increments, cfg.store_aux, path_offset)


def simulate_path(k_mu: KernelSpec, k_sigma: KernelSpec, c: CoefficientPair,
                  x0: InitialCondition, d: BrownianDriver, grid: DyadicGrid,
                  cfg: SchemeConfig = SchemeConfig()) -> PathSample:
    """Simulate one path of the scheme on `grid` driven by `d`.

    The grid must be a sub-grid of the driver's finest grid; the driver is
    restricted exactly, so the same realization drives every refinement
    level.  Audit flags on the kernels warn but never block.
    """
    _warn_irregular(k_mu, k_sigma)
    inc = restrict(d, grid)
    values, aux_y, aux_z = simulate_from_increments(
        k_mu, k_sigma, c, x0, grid, inc[None, :], cfg)
    x0_vals = np.asarray(x0.x0(grid.times()), float) if cfg.store_aux else None
    return PathSample(grid=grid, values=values[0],
                      aux_y=None if aux_y is None else aux_y[0],
                      aux_z=None if aux_z is None else aux_z[0],
                      x0_values=x0_vals,
                      driver_seed=d.seed)


class EnsembleResult:
    """Simulated ensemble with streaming access to paths and moments."""

    def __init__(self, grid: DyadicGrid, base_seed: int, values: np.ndarray,
                 aux_y=None, aux_z=None, x0_values=None, warnings_=()):
        self.grid = grid
        self.base_seed = base_seed
        self.values = values
        self.aux_y = aux_y
        self.aux_z = aux_z
        self.x0_values = x0_values
        self.warnings = tuple(warnings_)
        self._moments = None

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def moments(self) -> RunningMoments:
        """Per-time-point accumulators, merged in path-index order."""
        if self._moments is None:
            acc = RunningMoments(self.values.shape[1])
            for lo in range(0, self.n_paths, BATCH_SIZE):
                acc.add_block(self.values[lo:lo + BATCH_SIZE])
            self._moments = acc
        return self._moments

    def paths(self):
        for p in range(self.n_paths):
            yield self.path(p)

    def path(self, p: int) -> PathSample:
        return PathSample(
            grid=self.grid, values=self.values[p],
            aux_y=None if self.aux_y is None else self.aux_y[p],
            aux_z=None if self.aux_z is None else self.aux_z[p],
            x0_values=self.x0_values,
            driver_seed=self.base_seed + p)


def driver_increment_matrix(base_seed: int, grid: DyadicGrid,
                            first_path: int, n_paths: int) -> np.ndarray:
    """Increment rows for paths first_path..first_path+n_paths (disjoint seeds)."""
    out = np.empty((n_paths, grid.n_steps))
    for p in range(n_paths):
        out[p] = sample_driver(base_seed + first_path + p, grid).increments
    return out


def _batched(n_paths: int):
    return [(lo, min(lo + BATCH_SIZE, n_paths))
            for lo in range(0, n_paths, BATCH_SIZE)]


def run_batches(task, n_paths: int, workers: int = 1):
    """Execute `task(lo, hi)` over fixed-size path batches.

    Batch boundaries depend only on n_paths, and paths never interact, so
    any worker count produces identical results.  Failures are re-raised
    deterministically: the non-finite error with the smallest path index
    wins, otherwise the earliest batch's error.
    """
    batches = _batched(n_paths)
    errors = []
    if workers <= 1 or len(batches) == 1:
        for lo, hi in batches:
            try:
                task(lo, hi)
            except NonFiniteValueError as exc:
                errors.append(exc)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(task, lo, hi) for lo, hi in batches]
            for fut in futures:
                try:
                    fut.result()
                except NonFiniteValueError as exc:
                    errors.append(exc)
    if errors:
        raise min(errors, key=lambda e: (e.path, e.step))


def simulate_ensemble(k_mu: KernelSpec, k_sigma: KernelSpec,
                      c: CoefficientPair, x0: InitialCondition,
                      grid: DyadicGrid, cfg: SchemeConfig, base_seed: int,
                      n_paths: int, workers: int = 1) -> EnsembleResult:
    """Simulate n_paths independent paths; path p uses seed base_seed + p.

    Results are independent of evaluation order and worker count: batches
    have a fixed size, each path touches only its own rows, and moment
    accumulators merge in path-index order.
    """
    if n_paths < 1:
        raise InvalidParameterError("n_paths must be >= 1")
    notes = _warn_irregular(k_mu, k_sigma)
    times, x0_vals, prov_mu, prov_sig = _prepare(k_mu, k_sigma, c, x0, grid, cfg)
    n = grid.n_steps
    values = np.empty((n_paths, n + 1))
    aux_y = np.empty((n_paths, n + 1)) if cfg.store_aux else None
    aux_z = np.empty((n_paths, n + 1)) if cfg.store_aux else None

    def task(lo, hi):
        dB = driver_increment_matrix(base_seed, grid, lo, hi - lo)
        v, ay, az = _run_block(prov_mu, prov_sig, c, x0_vals, times, grid.dt,
                               dB, cfg.store_aux, lo)
        values[lo:hi] = v
        if cfg.store_aux:
            aux_y[lo:hi] = ay
            aux_z[lo:hi] = az

    run_batches(task, n_paths, workers)
    return EnsembleResult(grid=grid, base_seed=base_seed, values=values,
                          aux_y=aux_y, aux_z=aux_z,
                          x0_values=x0_vals if cfg.store_aux else None,
                          warnings_=notes)
