"""Smooth approximations of the absolute value used by the theory.

Two constructions are implemented and property-tested:

* a two-parameter smoothing with a mollifier supported in [eps/delta, eps]
  whose density is capped by 2 / (x log delta), and
* the threshold sequence a_0 = 1 > a_1 > ... defined by
  int_{a_n}^{a_{n-1}} rho(x)^-2 dx = n together with mollifiers psi_n
  supported in (a_n, a_{n-1}) and capped by 2 / (n rho(x)^2).

Only the existence of such mollifiers is asserted by the theory; the
concrete shape here is a capped bump: the bounding profile, flattened at
its high end and rolled off smoothly near both support endpoints, then
normalized to unit mass.  Supports span orders of magnitude, so the bump
transition and the antiderivative lattice both live in log-x coordinates.
Antiderivatives are tabulated once (2^16 nodes) and interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .coeffs import audit_yw_divergence, reciprocal_square_integral
from .errors import (ConstructionError, DivergenceAuditError,
                     InvalidParameterError, RootNotBracketedError)

LATTICE_POINTS = 2 ** 16
_RAMP = 0.1  # fraction of the log-support occupied by each roll-off


def _vec1(fn: Callable) -> Callable:
    try:
        if np.asarray(fn(np.array([0.25, 0.5]))).shape == (2,):
            return fn
    except Exception:
        pass
    return np.vectorize(fn, otypes=[float])


@dataclass(frozen=True)
class Mollifier:
    """Normalized capped-bump density with tabulated antiderivatives.

    psi integrates to one (lattice quadrature) and satisfies
    psi <= bound pointwise; phi(x) = int_0^|x| int_0^y psi(z) dz dy.
    """

    support: Tuple[float, float]
    psi: Callable
    phi: Callable
    phi_prime: Callable
    phi_second: Callable
    bound: Callable
    mass: float
    bound_margin: float
    lattice_x: np.ndarray
    lattice_phi: np.ndarray
    lattice_phi_prime: np.ndarray

    def export_csv(self, path) -> None:
        x = self.lattice_x
        data = np.column_stack([x, self.phi(x), self.phi_prime(x),
                                self.phi_second(x)])
        np.savetxt(path, data, delimiter=",", comments="",
                   header="x,phi,phi_prime,phi_second", fmt="%.17g")


def _smooth_ramp(w: np.ndarray) -> np.ndarray:
    """0 -> 1 cosine ramp on [0, 1]."""
    return 0.5 * (1.0 - np.cos(np.pi * np.clip(w, 0.0, 1.0)))


def _build_mollifier(profile: Callable, bound: Callable, lo: float,
                     hi: float) -> Mollifier:
    """Normalize min(profile, cap) * bump on [lo, hi] and tabulate phi."""
    if not (0.0 < lo < hi):
        raise InvalidParameterError("support must satisfy 0 < lo < hi")
    u_lo, u_hi = np.log(lo), np.log(hi)
    span = u_hi - u_lo
    cap = float(profile(np.exp(u_lo + _RAMP * span)))

    def shape(x):
        x = np.asarray(x, float)
        with np.errstate(all="ignore"):
            w = (np.log(np.where(x > 0, x, 1.0)) - u_lo) / span
        inside = (x > lo) & (x < hi)
        rise = _smooth_ramp(w / _RAMP)
        fall = _smooth_ramp((1.0 - w) / _RAMP)
        bump = np.minimum(np.minimum(rise, fall), 1.0)
        vals = np.minimum(profile(np.where(inside, x, hi)), cap) * bump
        return np.where(inside, vals, 0.0)

    u = np.linspace(u_lo, u_hi, LATTICE_POINTS)
    x = np.exp(u)
    raw = shape(x)
    # trapezoid pieces accumulated sequentially; dividing the cumulative
    # integral by its own final value makes the total mass exactly 1.0
    w_u = np.diff(u)
    pieces = 0.5 * w_u * (raw[:-1] * x[:-1] + raw[1:] * x[1:])
    cum_raw = np.concatenate([[0.0], np.cumsum(pieces)])
    mass_raw = cum_raw[-1]
    if not (np.isfinite(mass_raw) and mass_raw > 0):
        raise ConstructionError("mollifier shape has no usable mass")

    def psi(arg):
        return shape(np.abs(np.asarray(arg, float))) / mass_raw

    psi_lat = raw / mass_raw
    bound_lat = np.asarray(bound(x), float)
    margin = float(np.min(bound_lat - psi_lat))
    if margin < -1e-12 * np.max(bound_lat[np.isfinite(bound_lat)]):
        raise ConstructionError(
            f"normalized mollifier exceeds its pointwise bound (margin {margin})")

    cum1 = cum_raw / mass_raw
    total = cum1[-1]
    cum2 = np.concatenate([[0.0], np.cumsum(0.5 * w_u * (cum1[:-1] * x[:-1]
                                                         + cum1[1:] * x[1:]))])
    phi_hi = cum2[-1]

    def phi_prime(arg):
        a = np.asarray(arg, float)
        m = np.abs(a)
        inner = np.interp(np.log(np.where(m > 0, m, lo)), u, cum1,
                          left=0.0, right=total)
        inner = np.where(m <= lo, 0.0, np.where(m >= hi, total, inner))
        return np.sign(a) * inner

    def phi(arg):
        m = np.abs(np.asarray(arg, float))
        mid = np.interp(np.log(np.where(m > 0, m, lo)), u, cum2,
                        left=0.0, right=phi_hi)
        out = np.where(m <= lo, 0.0,
                       np.where(m >= hi, phi_hi + (m - hi) * total, mid))
        return out if out.ndim else float(out)

    def phi_second(arg):
        return psi(arg)

    return Mollifier(support=(lo, hi), psi=psi, phi=phi,
                     phi_prime=phi_prime, phi_second=phi_second,
                     bound=bound, mass=float(total), bound_margin=margin,
                     lattice_x=x, lattice_phi=cum2, lattice_phi_prime=cum1)


@dataclass(frozen=True)
class YWSmoother:
    """Smoothing of |x| controlled by (delta, eps); support [eps/delta, eps]."""

    delta: float
    eps: float
    mollifier: Mollifier

    @property
    def psi(self):
        return self.mollifier.psi

    @property
    def phi(self):
        return self.mollifier.phi

    @property
    def phi_prime(self):
        return self.mollifier.phi_prime

    @property
    def phi_second(self):
        return self.mollifier.phi_second

    def export_csv(self, path) -> None:
        self.mollifier.export_csv(path)


def build_smoother(delta: float, eps: float) -> YWSmoother:
    """Construct the (delta, eps) smoothing of the absolute value.

    The density is bounded by 2 / (x log delta) on [eps/delta, eps]; the
    uncapped profile 1 / (x log delta) integrates to exactly one there, and
    the log-space roll-off keeps at least ~80% of that mass, so the
    normalization constant stays safely below the factor-2 headroom.  The
    bound is still verified pointwise and violations raise.
    """
    if delta <= 1.0:
        raise InvalidParameterError("delta must exceed 1")
    if eps <= 0.0:
        raise InvalidParameterError("eps must be positive")
    log_delta = np.log(delta)

    def profile(x):
        return 1.0 / (np.asarray(x, float) * log_delta)

    def bound(x):
        return 2.0 / (np.asarray(x, float) * log_delta)

    mol = _build_mollifier(profile, bound, eps / delta, eps)
    return YWSmoother(delta=delta, eps=eps, mollifier=mol)


def verify_smoother_inequalities(s: YWSmoother, sample_points):
    """Check the three smoothing inequalities at every sample point.

    (i)  |x| <= phi(x) + eps
    (ii) 0 <= |phi'(x)| <= 1
    (iii) phi''(x) = psi(|x|) <= 2 / (|x| log delta) on the support,
          and phi'' vanishes off the support.

    Returns (passed, worst_margin) where the margin is the least slack.
    """
    x = np.asarray(sample_points, float)
    m = np.abs(x)
    lo, hi = s.mollifier.support
    margin1 = float(np.min(s.phi(x) + s.eps - m))
    margin2 = float(np.min(1.0 - np.abs(s.phi_prime(x))))
    second = np.asarray(s.phi_second(x), float)
    on_support = (m >= lo) & (m <= hi)
    with np.errstate(divide="ignore"):
        cap = np.where(on_support, 2.0 / (m * np.log(s.delta)), 0.0)
    margin3 = float(np.min(cap - second))
    worst = min(margin1, margin2, margin3)
    return worst >= 0.0, worst


def yw_thresholds(rho: Callable, n_max: int, a0: float = 1.0) -> np.ndarray:
    """Solve int_{a_n}^{a_{n-1}} rho^-2 = n for a_1..a_n_max, a_0 fixed.

    Bracketed bisection in log space; the quadrature runs at relative
    tolerance 1e-12, so thresholds carry ~1e-11 relative error even when
    they are many orders of magnitude below a_0.
    """
    rho = _vec1(rho)
    a = [float(a0)]
    for n in range(1, n_max + 1):
        prev = a[-1]
        target = float(n)
        lo = prev
        for _ in range(600):
            lo = lo / 4.0
            if lo < 1e-300:
                raise RootNotBracketedError(
                    f"threshold {n} underflows the floating-point range")
            if reciprocal_square_integral(rho, lo, prev) > target:
                break
        else:
            raise RootNotBracketedError(
                f"could not bracket threshold {n}")
        u_lo, u_hi = np.log(lo), np.log(prev)
        for _ in range(200):
            if u_hi - u_lo <= 1e-14:
                break
            u_mid = 0.5 * (u_lo + u_hi)
            if reciprocal_square_integral(rho, float(np.exp(u_mid)), prev) > target:
                u_lo = u_mid
            else:
                u_hi = u_mid
        a.append(float(np.exp(0.5 * (u_lo + u_hi))))
    return np.array(a)


@dataclass(frozen=True)
class YWSequence:
    """Thresholds a_n and the mollifier family (psi_n, phi_n) built on rho."""

    rho: Callable
    a: np.ndarray
    mollifiers: Tuple[Mollifier, ...]

    def psi_n(self, n: int) -> Callable:
        return self.mollifiers[n - 1].psi

    def phi_n(self, n: int) -> Callable:
        return self.mollifiers[n - 1].phi

    def phi_prime_n(self, n: int) -> Callable:
        return self.mollifiers[n - 1].phi_prime

    def export_csv(self, path, n: int) -> None:
        self.mollifiers[n - 1].export_csv(path)


def build_yw_sequence(rho: Callable, n_max: int) -> YWSequence:
    """Thresholds plus one mollifier per index, psi_n <= 2 / (n rho^2).

    The modulus must pass the divergence audit first: the construction is
    meaningless when the reciprocal-square integral converges at zero.
    """
    if n_max < 1:
        raise InvalidParameterError("n_max must be >= 1")
    rho = _vec1(rho)
    passed, _ = audit_yw_divergence(rho)
    if not passed:
        raise DivergenceAuditError(
            "kernel of the threshold equation does not diverge at zero")
    a = yw_thresholds(rho, n_max)
    mols = []
    for n in range(1, n_max + 1):
        def profile(x, n=n):
            return 2.0 / (n * np.asarray(rho(x), float) ** 2)

        mols.append(_build_mollifier(profile, profile, a[n], a[n - 1]))
    return YWSequence(rho=rho, a=a, mollifiers=tuple(mols))


@dataclass(frozen=True)
class SmoothingSchedule:
    """Level-m smoothing parameters and the resulting gap bound term."""

    delta: float
    eps: float
    gap_bound: float


def smoothing_schedule(m: int, beta: float, xi: float, rho: float) -> SmoothingSchedule:
    """Evaluate the level-m choice of (delta, eps) and its gap constant.

    delta = 2^(rho m^5), eps = 2^(-(1+2 xi) beta m^5 / 2) and the bound

        2^(-beta m^5) + m^-5 2^(-(1+2 xi) beta xi m^5)
                      + m^-5 2^(-((1+2 xi) beta / 2 - rho) m^5).

    Floats saturate quickly in m (overflow of delta, underflow of the
    bound); this helper is evaluation-only.
    """
    if m < 1:
        raise InvalidParameterError("m must be a positive integer")
    if not 0.0 < beta < 0.5:
        raise InvalidParameterError("beta must lie in (0, 1/2)")
    if not 0.0 <= xi <= 0.5:
        raise InvalidParameterError("xi must lie in [0, 1/2]")
    half_order = (1.0 + 2.0 * xi) * beta / 2.0
    if not 0.0 < rho <= half_order:
        raise InvalidParameterError(
            f"rho must lie in (0, {half_order}] for beta={beta}, xi={xi}")
    m5 = float(m) ** 5
    with np.errstate(over="ignore", under="ignore"):
        delta = 2.0 ** (rho * m5)
        eps = 2.0 ** (-half_order * m5)
        gap = (2.0 ** (-beta * m5)
               + m5 ** -1 * 2.0 ** (-(1.0 + 2.0 * xi) * beta * xi * m5)
               + m5 ** -1 * 2.0 ** (-(half_order - rho) * m5))
    return SmoothingSchedule(delta=float(delta), eps=float(eps),
                             gap_bound=float(gap))
