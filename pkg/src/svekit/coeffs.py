"""Coefficient pairs (drift, diffusion) with regularity metadata and checkers.

The metadata mirrors the regularity conditions the solution theory needs:
a linear-growth constant, a Lipschitz constant for the drift, a Hoelder
constant and order 1/2 + xi for the diffusion, and optional Osgood /
Yamada-Watanabe moduli.  Checkers estimate the corresponding quantities
on finite grids; divergence conditions get a finite falsification audit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateGridError, InvalidParameterError
from .expr import compile_expression

COEFF_FAMILIES = ("linear_ou", "holder_power", "constant_sigma", "custom")


def _two_params(params, family):
    if len(params) != 2:
        raise InvalidParameterError(
            f"family {family!r} takes 2 parameters, got {len(params)}")
    try:
        return float(params[0]), float(params[1])
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(
            f"family {family!r} parameters must be numeric") from exc


def _vectorized(handle: Callable, probe_x: float = 0.5) -> Callable:
    """Return a handle that accepts array x; wrap scalar-only callables."""
    try:
        out = handle(0.0, np.array([probe_x, 2 * probe_x]))
        if np.asarray(out).shape == (2,):
            return handle
    except Exception:
        pass
    return np.vectorize(handle, otypes=[float])


@dataclass(frozen=True)
class CoefficientPair:
    """Drift mu(t, x) and diffusion sigma(t, x) with their declared constants.

    Handles must be pure and numpy-broadcastable (scalar t against array x);
    scalar-only callables are wrapped at construction.  ``xi`` declares the
    Hoelder order 1/2 + xi of sigma in space, uniformly in time.
    """

    mu: Callable
    sigma: Callable
    growth_const: float
    lipschitz_const: Optional[float] = None
    holder_const: Optional[float] = None
    xi: float = 0.5
    osgood_kappa: Optional[Callable] = None
    yw_rho: Optional[Callable] = None
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 <= self.xi <= 0.5:
            raise InvalidParameterError(f"xi out of [0, 0.5]: {self.xi}")
        if self.growth_const <= 0:
            raise InvalidParameterError("growth_const must be positive")
        object.__setattr__(self, "mu", _vectorized(self.mu))
        object.__setattr__(self, "sigma", _vectorized(self.sigma))
        probe = np.array([-3.0, -1.0, 0.0, 0.5, 2.0, 10.0])
        with np.errstate(all="ignore"):
            for label, fn in (("mu", self.mu), ("sigma", self.sigma)):
                vals = np.asarray(fn(0.0, probe), float)
                if not np.isfinite(vals).all():
                    raise InvalidParameterError(f"{label} is non-finite at finite inputs")
        if self.yw_rho is not None:
            grid = np.linspace(0.0, 1.0, 65)
            rho_vals = np.array([float(self.yw_rho(g)) for g in grid])
            if rho_vals[0] != 0.0:
                raise InvalidParameterError("yw_rho(0) must be 0")
            if not np.all(np.diff(rho_vals) > 0):
                raise InvalidParameterError("yw_rho must be strictly increasing")


@dataclass(frozen=True)
class InitialCondition:
    """Initial curve x0(t) with its declared Hoelder exponent."""

    x0: Callable
    holder_beta_claim: float = 0.5
    horizon_hint: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.holder_beta_claim <= 1.0:
            raise InvalidParameterError("holder_beta_claim must lie in (0, 1]")
        fn = self.x0
        if not callable(fn):
            const = float(fn)
            fn = lambda t: np.asarray(t, float) * 0.0 + const
        else:
            try:
                if np.asarray(fn(np.array([0.0, 0.5]))).shape != (2,):
                    fn = np.vectorize(fn, otypes=[float])
            except Exception:
                fn = np.vectorize(fn, otypes=[float])
        object.__setattr__(self, "x0", fn)
        # spot-check finiteness and continuity by small-step sampling
        t = np.linspace(0.0, self.horizon_hint, 257)
        vals = np.asarray(self.x0(t), float)
        if not np.isfinite(vals).all():
            raise InvalidParameterError("x0 is non-finite on [0, T]")
        h = 1e-7 * self.horizon_hint
        jump = np.abs(np.asarray(self.x0(t[:-1] + h), float) - vals[:-1])
        scale = 1.0 + float(np.abs(vals).max())
        if jump.max() > 0.01 * scale:
            raise InvalidParameterError("x0 looks discontinuous under small-step sampling")


def constant_initial(value: float, horizon: float = 1.0) -> InitialCondition:
    return InitialCondition(x0=float(value), holder_beta_claim=1.0,
                            horizon_hint=horizon)


def make_builtin_coeffs(family: str, params) -> CoefficientPair:
    """Built-in coefficient families with analytically correct metadata.

    linear_ou [theta, sigma0]      mu = -theta x, sigma = sigma0
    holder_power [c, xi]           mu = 0, sigma = c |x|^(1/2 + xi)
    constant_sigma [mu0, sigma0]   both coefficients constant
    """
    if family == "linear_ou":
        theta, sigma0 = _two_params(params, family)
        if theta < 0:
            raise InvalidParameterError("linear_ou needs theta >= 0")
        return CoefficientPair(
            mu=lambda t, x: -theta * np.asarray(x, float),
            sigma=lambda t, x: np.asarray(x, float) * 0.0 + sigma0,
            growth_const=max(theta, abs(sigma0), 1e-12),
            lipschitz_const=theta,
            holder_const=0.0,
            xi=0.5,
            osgood_kappa=lambda u: theta * np.asarray(u, float),
            yw_rho=lambda u: np.asarray(u, float),
            name=f"linear_ou({theta},{sigma0})")

    if family == "holder_power":
        c, xi = _two_params(params, family)
        if c <= 0:
            raise InvalidParameterError("holder_power needs c > 0")
        if not 0.0 <= xi <= 0.5:
            raise InvalidParameterError(f"xi out of [0, 0.5]: {xi}")
        order = 0.5 + xi
        return CoefficientPair(
            mu=lambda t, x: np.asarray(x, float) * 0.0,
            sigma=lambda t, x: c * np.abs(np.asarray(x, float)) ** order,
            growth_const=c,
            lipschitz_const=0.0,
            holder_const=c,
            xi=xi,
            osgood_kappa=lambda u: np.asarray(u, float),
            yw_rho=lambda u: c * np.asarray(u, float) ** order,
            name=f"holder_power({c},{xi})")

    if family == "constant_sigma":
        mu0, sigma0 = _two_params(params, family)
        return CoefficientPair(
            mu=lambda t, x: np.asarray(x, float) * 0.0 + mu0,
            sigma=lambda t, x: np.asarray(x, float) * 0.0 + sigma0,
            growth_const=max(abs(mu0) + abs(sigma0), 1e-12),
            lipschitz_const=0.0,
            holder_const=0.0,
            xi=0.5,
            osgood_kappa=lambda u: np.asarray(u, float),
            yw_rho=lambda u: np.asarray(u, float),
            name=f"constant_sigma({mu0},{sigma0})")

    if family == "custom":
        raise InvalidParameterError(
            "custom coefficients are built from expressions or handles, "
            "not from a parameter array")
    raise InvalidParameterError(
        f"unknown coefficient family {family!r} (valid: {', '.join(COEFF_FAMILIES)})")


def coeffs_from_expressions(mu_expr: str, sigma_expr: str, growth_const: float,
                            lipschitz_const: Optional[float] = None,
                            holder_const: Optional[float] = None,
                            xi: float = 0.5) -> CoefficientPair:
    """Custom coefficients from expression strings over (t, x)."""
    return CoefficientPair(
        mu=compile_expression(mu_expr, ("t", "x")),
        sigma=compile_expression(sigma_expr, ("t", "x")),
        growth_const=growth_const, lipschitz_const=lipschitz_const,
        holder_const=holder_const, xi=xi,
        name=f"custom(mu={mu_expr!r}, sigma={sigma_expr!r})")


def localize(c: CoefficientPair, n: float) -> CoefficientPair:
    """Clamp the state argument to [-n, n] outside the ball of radius n.

    Inside the ball both coefficients are unchanged.  Clamping is
    1-Lipschitz, so the declared constants remain valid bounds and are
    inherited unchanged.
    """
    if n <= 0:
        raise InvalidParameterError("localization radius must be positive")
    mu, sigma = c.mu, c.sigma
    return replace(
        c,
        mu=lambda t, x: mu(t, np.clip(np.asarray(x, float), -n, n)),
        sigma=lambda t, x: sigma(t, np.clip(np.asarray(x, float), -n, n)),
        name=f"{c.name}|localized({n})")


def estimate_holder_modulus(f: Callable, order: float, t_grid, x_grid) -> float:
    """Brute-force sup of |f(t,x) - f(t,y)| / |x - y|^order over the grids."""
    if not 0.0 < order <= 1.0:
        raise InvalidParameterError("order must lie in (0, 1]")
    x = np.unique(np.asarray(x_grid, float))
    if x.size < 2:
        raise DegenerateGridError("need at least two distinct x points")
    t_grid = np.atleast_1d(np.asarray(t_grid, float))
    iu = np.triu_indices(x.size, k=1)
    dist = np.abs(x[:, None] - x[None, :])[iu] ** order
    worst = 0.0
    for t in t_grid:
        v = np.asarray(f(float(t), x), float)
        num = np.abs(v[:, None] - v[None, :])[iu]
        worst = max(worst, float(np.max(num / dist)))
    return worst


def check_linear_growth(c: CoefficientPair, t_grid, x_grid,
                        tolerance: float = 1e-9):
    """Check |mu| + |sigma| <= growth_const (1 + |x|) on the grid.

    Returns (passed, worst_ratio).
    """
    x = np.atleast_1d(np.asarray(x_grid, float))
    worst = 0.0
    for t in np.atleast_1d(np.asarray(t_grid, float)):
        num = np.abs(np.asarray(c.mu(float(t), x), float)) \
            + np.abs(np.asarray(c.sigma(float(t), x), float))
        worst = max(worst, float(np.max(num / (1.0 + np.abs(x)))))
    return worst <= c.growth_const * (1.0 + tolerance), worst


def _log_quad(integrand: Callable, a: float, b: float) -> float:
    """Integrate integrand over [a, b] after the substitution x = e^u."""
    val, _ = quad(lambda u: np.exp(u) * integrand(np.exp(u)),
                  np.log(a), np.log(b), epsabs=0.0, epsrel=1e-12, limit=400)
    return val


def reciprocal_square_integral(rho: Callable, a: float, b: float) -> float:
    """Integral of rho(x)^-2 over [a, b], log-substituted for 1/x-type mass."""
    return _log_quad(lambda x: 1.0 / float(rho(x)) ** 2, a, b)


def audit_yw_divergence(rho: Callable, upper: float = 1.0,
                        deltas=None, min_increment_ratio: float = 0.5):
    """Finite falsification of the divergence of the reciprocal-square integral.

    Evaluates I(d) = int_d^upper rho^-2 for a decreasing ladder of lower
    limits and requires the per-decade increments not to decay: the last
    increment must stay above ``min_increment_ratio`` times the first.
    Returns (passed, integrals).
    """
    if deltas is None:
        deltas = [10.0 ** (-k) for k in range(2, 9)]
    deltas = sorted(float(d) for d in deltas)[::-1]
    if deltas[0] >= upper:
        raise InvalidParameterError("deltas must lie below the upper limit")
    integrals = np.array([reciprocal_square_integral(rho, d, upper)
                          for d in deltas])
    inc = np.diff(integrals)
    passed = bool(np.all(inc > 0) and inc[0] > 0
                  and inc[-1] >= min_increment_ratio * inc[0])
    return passed, integrals


def audit_osgood_divergence(kappa: Callable, alpha: float, q_values=None,
                            upper: float = 1.0, deltas=None,
                            min_increment_ratio: float = 0.5):
    """Divergence audit for the drift modulus, per exponent q.

    The checked integrand is x -> (kappa(x^(1/q)) + x^(1/q))^(-q).  The
    admissible q window opens at 1/(1 - alpha); without guidance on its
    width, the default probes three exponents just above the opening.
    Returns a dict q -> (passed, integrals).
    """
    base = 1.0 / (1.0 - alpha)
    if q_values is None:
        q_values = [base * 1.001, base * 1.01, base * 1.05]
    out = {}
    for q in q_values:
        if q <= base:
            raise InvalidParameterError(f"q = {q} is not above 1/(1 - alpha) = {base}")

        def integrand(x, q=q):
            r = x ** (1.0 / q)
            return 1.0 / (float(kappa(r)) + r) ** q

        if deltas is None:
            ds = [10.0 ** (-k) for k in range(2, 9)]
        else:
            ds = deltas
        ds = sorted(float(d) for d in ds)[::-1]
        integrals = np.array([_log_quad(integrand, d, upper) for d in ds])
        inc = np.diff(integrals)
        passed = bool(np.all(inc > 0) and inc[0] > 0
                      and inc[-1] >= min_increment_ratio * inc[0])
        out[q] = (passed, integrals)
    return out
