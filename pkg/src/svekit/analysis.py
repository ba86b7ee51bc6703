"""Statistical verification of the solution theory at desk scale.

Every estimator is deterministic given (base_seed, configuration): path
batches have a fixed size, per-batch partial results are reduced in batch
order, and the simulation engine itself is order-fixed.  "sup over t"
always means the maximum over grid points; uniqueness evidence is reported
as "consistent with", never as proof.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ._accel import weighted_state_update
from .coeffs import CoefficientPair, InitialCondition
from .errors import (DegenerateFitError, IdenticalConfigError,
                     InsufficientPathsError, InvalidParameterError,
                     MissingAuxError, MissingDerivativeError)
from .kernels import KernelSpec
from .noise import DyadicGrid, restrict_increments
from .scheme import (BATCH_SIZE, EnsembleResult, PathSample, SchemeConfig,
                     driver_increment_matrix, run_batches,
                     simulate_from_increments)

JACKKNIFE_BLOCKS = 20


def _dump_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


@dataclass(frozen=True)
class MomentReport:
    """Estimated sup_t E|X_t|^q per requested order q."""

    q_list: tuple
    sup_moment: dict
    mc_stderr: dict
    per_time: Optional[dict] = None
    times: Optional[np.ndarray] = None
    disclaimers: tuple = ()

    def to_json_dict(self) -> dict:
        return {"schema": "moment-v1",
                "q": [float(q) for q in self.q_list],
                "sup_moment": [float(self.sup_moment[q]) for q in self.q_list],
                "mc_stderr": [float(self.mc_stderr[q]) for q in self.q_list],
                "disclaimers": list(self.disclaimers)}

    def write_csv(self, path) -> None:
        if self.per_time is None:
            raise InvalidParameterError("report carries no per-time curves")
        cols = [self.times] + [self.per_time[q] for q in self.q_list]
        header = "t," + ",".join(f"E_abs_X_pow_{q:g}" for q in self.q_list)
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
                   comments="", fmt="%.17g")

    def write_json(self, path) -> None:
        _dump_json(self.to_json_dict(), path)


@dataclass(frozen=True)
class HolderEstimate:
    """Fitted path-regularity exponent from the lag-moment regression."""

    p: float
    lags: tuple
    beta_hat: float
    r_squared: float
    intercept: float
    d_values: tuple = ()
    disclaimers: tuple = ()

    def to_json_dict(self) -> dict:
        return {"schema": "holder-v1", "p": float(self.p),
                "lags": [float(h) for h in self.lags],
                "d_values": [float(d) for d in self.d_values],
                "beta_hat": float(self.beta_hat),
                "r_squared": float(self.r_squared),
                "intercept": float(self.intercept),
                "disclaimers": list(self.disclaimers)}

    def write_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.lags, self.d_values]),
                   delimiter=",", header="lag,mean_abs_increment_pow_p",
                   comments="", fmt="%.17g")

    def write_json(self, path) -> None:
        _dump_json(self.to_json_dict(), path)


@dataclass(frozen=True)
class ConvergenceReport:
    """Gap curve across refinement levels and its fitted decay rate.

    ``fitted_rate`` is the least-squares slope of log2(gap) against level:
    -1 means the gap halves per level.  For the refinement (Cauchy) gaps
    there is one gap per consecutive level pair, indexed by the coarser
    level; for the coupling test there is one gap per level.
    """

    levels: tuple
    gaps: tuple
    fitted_rate: float
    schema: str = "cauchy-v1"
    disclaimers: tuple = ()

    def to_json_dict(self) -> dict:
        return {"schema": self.schema,
                "levels": [int(v) for v in self.levels],
                "gaps": [float(g) for g in self.gaps],
                "fitted_rate": float(self.fitted_rate),
                "disclaimers": list(self.disclaimers)}

    def write_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.levels, self.gaps]),
                   delimiter=",", header="level,gap", comments="",
                   fmt="%.17g")

    def write_json(self, path) -> None:
        _dump_json(self.to_json_dict(), path)


@dataclass(frozen=True)
class DecompositionReport:
    """Residual of the reconstructed martingale + finite-variation split."""

    residual_sup: float
    times: Optional[np.ndarray] = None
    m_curve: Optional[np.ndarray] = None
    a_curve: Optional[np.ndarray] = None
    disclaimers: tuple = ()

    def to_json_dict(self) -> dict:
        return {"schema": "decomp-v1",
                "residual_sup": float(self.residual_sup),
                "disclaimers": list(self.disclaimers)}

    def write_csv(self, path) -> None:
        if self.m_curve is None or self.a_curve is None:
            raise InvalidParameterError("report carries no component curves")
        np.savetxt(path, np.column_stack([self.times, self.m_curve, self.a_curve]),
                   delimiter=",", header="t,martingale,finite_variation",
                   comments="", fmt="%.17g")

    def write_json(self, path) -> None:
        _dump_json(self.to_json_dict(), path)


def _block_bounds(n: int, blocks: int):
    sizes = np.full(blocks, n // blocks)
    sizes[: n % blocks] += 1
    ends = np.cumsum(sizes)
    return np.concatenate([[0], ends])


def estimate_moments(ensemble: EnsembleResult, q_list,
                     include_per_time: bool = True) -> MomentReport:
    """sup_t E|X_t|^q with jackknife-over-path-blocks standard errors.

    Paths are split into 20 index-contiguous blocks; the stderr of the sup
    is the delete-one-block jackknife estimate.
    """
    q_list = tuple(float(q) for q in q_list)
    if any(not 1.0 <= q <= 8.0 for q in q_list):
        raise InvalidParameterError("moment orders must lie in [1, 8]")
    n_paths = ensemble.n_paths
    if n_paths < 2 * JACKKNIFE_BLOCKS:
        raise InsufficientPathsError(
            f"need at least {2 * JACKKNIFE_BLOCKS} paths for jackknife blocks, "
            f"got {n_paths}")
    bounds = _block_bounds(n_paths, JACKKNIFE_BLOCKS)
    sup_moment, stderr, per_time = {}, {}, {}
    for q in q_list:
        powered = np.abs(ensemble.values) ** q
        block_sums = np.stack([powered[bounds[b]:bounds[b + 1]].sum(axis=0)
                               for b in range(JACKKNIFE_BLOCKS)])
        total = block_sums.sum(axis=0)
        curve = total / n_paths
        sup_moment[q] = float(curve.max())
        per_time[q] = curve
        theta = np.empty(JACKKNIFE_BLOCKS)
        for b in range(JACKKNIFE_BLOCKS):
            size_b = bounds[b + 1] - bounds[b]
            theta[b] = ((total - block_sums[b]) / (n_paths - size_b)).max()
        theta_bar = theta.mean()
        stderr[q] = float(np.sqrt((JACKKNIFE_BLOCKS - 1) / JACKKNIFE_BLOCKS
                                  * np.sum((theta - theta_bar) ** 2)))
    return MomentReport(q_list=q_list, sup_moment=sup_moment,
                        mc_stderr=stderr,
                        per_time=per_time if include_per_time else None,
                        times=ensemble.grid.times(),
                        disclaimers=ensemble.warnings)


def estimate_holder_exponent(ensemble: EnsembleResult, p: float, lags,
                             min_lag_steps: int = 4,
                             max_lag_fraction: float = 0.125) -> HolderEstimate:
    """Fit the regularity exponent from lag moments of the increments.

    D(h) averages |X_{t+h} - X_t|^p over all valid t and all paths; the
    least-squares fit of log D against log h has slope p * beta_hat.  Lags
    below `min_lag_steps` grid steps or above `max_lag_fraction` of the
    horizon are excluded (discretization floor / too few windows).
    """
    if p < 2:
        raise InvalidParameterError("p must be at least 2")
    dt = ensemble.grid.dt
    horizon = ensemble.grid.horizon
    lags = np.unique(np.asarray(lags, float))
    if lags.size < 4 or lags.min() <= 0 or lags.max() / lags.min() < 4.0:
        raise InvalidParameterError(
            "need at least 4 distinct positive lags spanning two octaves")
    steps = np.rint(lags / dt).astype(int)
    if np.any(np.abs(steps * dt - lags) > 1e-9 * np.maximum(lags, dt)) or np.any(steps < 1):
        raise InvalidParameterError("lags must be positive multiples of the grid step")
    keep = (steps >= min_lag_steps) & (lags <= horizon * max_lag_fraction)
    steps, lags = steps[keep], lags[keep]
    if steps.size < 4 or lags.max() / lags.min() < 4.0:
        raise InvalidParameterError(
            "after windowing, fewer than 4 lags (or under two octaves) remain")
    values = ensemble.values
    d_vals = np.empty(steps.size)
    for m, s in enumerate(steps):
        d_vals[m] = np.mean(np.abs(values[:, s:] - values[:, :-s]) ** p)
    if np.any(d_vals <= 0.0):
        raise DegenerateFitError("zero increment moment; path is constant")
    x = np.log(lags)
    y = np.log(d_vals)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return HolderEstimate(p=float(p), lags=tuple(lags),
                          beta_hat=float(slope / p), r_squared=r2,
                          intercept=float(intercept),
                          d_values=tuple(d_vals),
                          disclaimers=ensemble.warnings)


def _fit_rate(levels, gaps):
    levels = np.asarray(levels, float)
    gaps = np.asarray(gaps, float)
    pos = gaps > 0
    if pos.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(levels[pos], np.log2(gaps[pos]), 1)
    return float(slope)


def measure_cauchy_gaps(k_mu: KernelSpec, k_sigma: KernelSpec,
                        c: CoefficientPair, x0: InitialCondition,
                        base_seed: int, n_paths: int, levels,
                        cfg: SchemeConfig = SchemeConfig(),
                        workers: int = 1) -> ConvergenceReport:
    """Coupled-driver gaps between consecutive refinement levels.

    One driver per path is sampled at the finest level and restricted
    exactly to every requested level, so consecutive approximations see
    the same realization.  The gap for the pair (L, L+1) is the maximum
    over the coarser grid of the ensemble-average absolute difference.
    """
    levels = [int(v) for v in levels]
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise InvalidParameterError("levels must be non-decreasing")
    if len(levels) < 2:
        raise InvalidParameterError("need at least two levels")
    finest_level = max(levels)
    T = k_sigma.triangle.horizon
    finest = DyadicGrid(horizon=T, level=finest_level)
    grids = {lv: DyadicGrid(horizon=T, level=lv) for lv in set(levels)}
    cfg = replace(cfg, store_aux=False)
    n_batches = (n_paths + BATCH_SIZE - 1) // BATCH_SIZE
    pair_list = list(zip(levels[:-1], levels[1:]))
    partial = {m: np.zeros((n_batches, grids[lo].n_steps + 1))
               for m, (lo, hi) in enumerate(pair_list)}

    def task(lo_p, hi_p):
        dB = driver_increment_matrix(base_seed, finest, lo_p, hi_p - lo_p)
        values = {}
        for lv in sorted(set(levels)):
            inc = restrict_increments(dB, finest_level - lv)
            values[lv], _, _ = simulate_from_increments(
                k_mu, k_sigma, c, x0, grids[lv], inc, cfg, path_offset=lo_p)
        for m, (la, lb) in enumerate(pair_list):
            stride = 2 ** (lb - la)
            diff = np.abs(values[lb][:, ::stride] - values[la])
            partial[m][lo_p // BATCH_SIZE] = diff.sum(axis=0)

    run_batches(task, n_paths, workers)
    gaps = []
    for m in range(len(pair_list)):
        mean_curve = partial[m].sum(axis=0) / n_paths
        gaps.append(float(mean_curve.max()))
    coarse_levels = [la for la, lb in pair_list]
    disclaimers = tuple(
        f"kernel {k.name!r} is outside the audited regularity class"
        for k in (k_mu, k_sigma) if not k.regular)
    return ConvergenceReport(levels=tuple(coarse_levels), gaps=tuple(gaps),
                             fitted_rate=_fit_rate(coarse_levels, gaps),
                             schema="cauchy-v1", disclaimers=disclaimers)


def uniqueness_coupling_test(k_mu: KernelSpec, k_sigma: KernelSpec,
                             c: CoefficientPair, x0: InitialCondition,
                             base_seed: int, n_paths: int, level: int,
                             cfg_a: SchemeConfig, cfg_b: SchemeConfig,
                             levels, workers: int = 1) -> ConvergenceReport:
    """Two discretizations, one Brownian realization: do they merge?

    Per path the driver is sampled at `level` and restricted to each
    entry of `levels`; both scheme configurations run on the identical
    increments.  Decreasing gaps are evidence consistent with pathwise
    uniqueness; they prove nothing.
    """
    if cfg_a == cfg_b:
        raise IdenticalConfigError(
            "coupling test needs two distinct scheme configurations")
    levels = [int(v) for v in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidParameterError("levels must be strictly increasing")
    if max(levels) > level:
        raise InvalidParameterError("driver level must dominate every level")
    T = k_sigma.triangle.horizon
    finest = DyadicGrid(horizon=T, level=level)
    grids = {lv: DyadicGrid(horizon=T, level=lv) for lv in levels}
    cfg_a = replace(cfg_a, store_aux=False)
    cfg_b = replace(cfg_b, store_aux=False)
    n_batches = (n_paths + BATCH_SIZE - 1) // BATCH_SIZE
    partial = {lv: np.zeros((n_batches, grids[lv].n_steps + 1)) for lv in levels}

    def task(lo_p, hi_p):
        dB = driver_increment_matrix(base_seed, finest, lo_p, hi_p - lo_p)
        for lv in levels:
            inc = restrict_increments(dB, level - lv)
            va, _, _ = simulate_from_increments(
                k_mu, k_sigma, c, x0, grids[lv], inc, cfg_a, path_offset=lo_p)
            vb, _, _ = simulate_from_increments(
                k_mu, k_sigma, c, x0, grids[lv], inc, cfg_b, path_offset=lo_p)
            partial[lv][lo_p // BATCH_SIZE] = np.abs(va - vb).sum(axis=0)

    run_batches(task, n_paths, workers)
    gaps = [float((partial[lv].sum(axis=0) / n_paths).max()) for lv in levels]
    disclaimers = tuple(
        f"kernel {k.name!r} is outside the audited regularity class"
        for k in (k_mu, k_sigma) if not k.regular)
    return ConvergenceReport(levels=tuple(levels), gaps=tuple(gaps),
                             fitted_rate=_fit_rate(levels, gaps),
                             schema="coupling-v1", disclaimers=disclaimers)


def _reconstruct_block(values, aux_y, aux_z, x0_vals, times, dt,
                       k_mu: KernelSpec, k_sigma: KernelSpec):
    """Vectorized reconstruction for a block of paths; returns residuals."""
    d2_mu = k_mu.d2
    d2_sig = k_sigma.d2
    if d2_mu is None or d2_sig is None:
        raise MissingDerivativeError(
            "semimartingale reconstruction needs d2 handles on both kernels")
    n_paths, n_plus = values.shape
    n = n_plus - 1
    dY = np.diff(aux_y, axis=1)
    dZ = np.diff(aux_z, axis=1)
    diag_mu = np.asarray(k_mu.eval_fn(times[:-1], times[:-1]), float)
    diag_sig = np.asarray(k_sigma.eval_fn(times[:-1], times[:-1]), float)
    m_curve = np.zeros((n_paths, n_plus))
    a1 = np.zeros((n_paths, n_plus))
    np.cumsum(diag_sig * dY, axis=1, out=m_curve[:, 1:])
    np.cumsum(diag_mu * dZ, axis=1, out=a1[:, 1:])
    inner = np.zeros((n_paths, n))
    out = np.empty(n_paths)
    dZc = np.ascontiguousarray(dZ)
    dYc = np.ascontiguousarray(dY)
    for i in range(1, n):
        row_mu = np.ascontiguousarray(
            np.asarray(d2_mu(times[:i], times[i]), float))
        row_sig = np.ascontiguousarray(
            np.asarray(d2_sig(times[:i], times[i]), float))
        weighted_state_update(row_mu, row_sig, dZc, dYc, i, 0.0, out)
        inner[:, i] = out
    a2 = np.zeros((n_paths, n_plus))
    np.cumsum(inner * dt, axis=1, out=a2[:, 1:])
    return values - x0_vals[None, :] - m_curve - a1 - a2, m_curve, a1 + a2


def reconstruct_semimartingale(path: PathSample, k_mu: KernelSpec,
                               k_sigma: KernelSpec,
                               c: CoefficientPair) -> DecompositionReport:
    """Rebuild the martingale + finite-variation split from one path.

    The martingale part uses the kernel diagonal against the stored
    diffusion increments; the finite-variation part discretizes the
    double integrals with the left-point rule in the outer variable and
    the stored auxiliary sums inside.  The report's residual_sup compares
    the sum against X - x0 on the grid.
    """
    if path.aux_y is None or path.aux_z is None or path.x0_values is None:
        raise MissingAuxError(
            "path lacks auxiliary arrays; simulate with store_aux=True")
    times = path.grid.times()
    residual, m_curve, a_curve = _reconstruct_block(
        path.values[None, :], path.aux_y[None, :], path.aux_z[None, :],
        path.x0_values, times, path.grid.dt, k_mu, k_sigma)
    return DecompositionReport(residual_sup=float(np.abs(residual[0]).max()),
                               times=times, m_curve=m_curve[0],
                               a_curve=a_curve[0])


def decomposition_residuals(ensemble: EnsembleResult, k_mu: KernelSpec,
                            k_sigma: KernelSpec,
                            c: CoefficientPair) -> np.ndarray:
    """residual_sup per path of an ensemble simulated with store_aux."""
    if ensemble.aux_y is None or ensemble.aux_z is None:
        raise MissingAuxError("ensemble lacks auxiliary arrays")
    residual, _, _ = _reconstruct_block(
        ensemble.values, ensemble.aux_y, ensemble.aux_z,
        ensemble.x0_values, ensemble.grid.times(), ensemble.grid.dt,
        k_mu, k_sigma)
    return np.abs(residual).max(axis=1)
