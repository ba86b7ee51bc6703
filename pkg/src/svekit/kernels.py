"""Two-argument Volterra kernels on the triangle and their regularity audit.

A kernel is a pure evaluation handle plus optional partial-derivative
handles and declared regularity metadata.  The audit checks the declared
conditions numerically on a nested lattice: boundedness of the drift
kernel's time derivative, the diagonal lower bound, the Hoelder integral
condition, and the weak-singularity bound on the diffusion kernel's
derivatives.  Existence-of-a-constant claims are made falsifiable by
fitting the constant on a coarse sub-lattice and checking it (times a
safety factor) on the full lattice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (DomainError, InvalidParameterError,
                     MissingDerivativeError, QuadratureError)

KERNEL_FAMILIES = ("constant", "exponential_convolution", "smooth_bivariate",
                   "fractional")

# below this separation, diagonal handles replace off-diagonal limits
DIAGONAL_ATOL = 1e-12

AUDIT_CONDITIONS = ("d2_mu_bounded", "sigma_diagonal_lower_bound",
                    "sigma_holder_integral", "sigma_derivative_singularity")


@dataclass(frozen=True)
class Triangle:
    """Domain {(s, t): 0 <= s <= t <= horizon}."""

    horizon: float

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise InvalidParameterError("horizon must be a positive real")

    def contains(self, s: float, t: float) -> bool:
        return 0.0 <= s <= t <= self.horizon


@dataclass(frozen=True)
class KernelSpec:
    """A kernel K(s, t) with derivative handles and regularity metadata.

    Evaluation handles must be pure, accept numpy arrays broadcast against
    scalars, and be safe to call from many workers at once.  ``regular``
    is False for kernels outside the audited regularity class (for example
    a diagonal blow-up); such kernels still simulate, but analyses attach
    a disclaimer and the auditor fails them.
    """

    eval_fn: Callable
    triangle: Triangle
    d1: Optional[Callable] = None
    d2: Optional[Callable] = None
    d21: Optional[Callable] = None
    gamma: float = 0.5
    epsilon: float = 1.0
    alpha: float = 0.0
    diag_lower_bound: float = 0.0
    is_convolution: bool = False
    convolution_profile: Optional[Callable] = None
    regular: bool = True
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 < self.gamma <= 0.5:
            raise InvalidParameterError(f"gamma must lie in (0, 1/2], got {self.gamma}")
        if not 0.0 <= self.alpha < 0.5:
            raise InvalidParameterError(f"alpha must lie in [0, 1/2), got {self.alpha}")
        if self.epsilon <= 0:
            raise InvalidParameterError("epsilon must be positive")
        if self.diag_lower_bound < 0:
            raise InvalidParameterError("diag_lower_bound must be nonnegative")
        if self.is_convolution and self.convolution_profile is None:
            raise InvalidParameterError("convolution kernels need a profile")


@dataclass(frozen=True)
class CheckResult:
    condition: str
    passed: bool
    margin: float
    witness: tuple

    def to_json_dict(self) -> dict:
        return {"condition": self.condition, "passed": bool(self.passed),
                "margin": float(self.margin),
                "witness": [float(self.witness[0]), float(self.witness[1])]}


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple
    grid_resolution: int
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, condition: str) -> CheckResult:
        for c in self.checks:
            if c.condition == condition:
                return c
        raise KeyError(condition)

    def to_json_dict(self) -> dict:
        return {"schema": "kernel-audit-v1",
                "grid_resolution": self.grid_resolution,
                "tolerances": {k: float(v) for k, v in self.tolerances.items()},
                "passed": self.passed,
                "checks": [c.to_json_dict() for c in self.checks]}


def eval_kernel(k: KernelSpec, s: float, t: float) -> float:
    """Evaluate K(s, t); raises DomainError outside the triangle."""
    if s < 0 or s > t or t > k.triangle.horizon:
        raise DomainError(f"(s, t) = ({s}, {t}) outside the triangle with "
                          f"T = {k.triangle.horizon}")
    return float(k.eval_fn(s, t))


def _as_float(params, n, family):
    if len(params) != n:
        raise InvalidParameterError(
            f"family {family!r} takes {n} parameter(s), got {len(params)}")
    try:
        return [float(p) for p in params]
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(
            f"family {family!r} parameters must be numeric") from exc


def make_builtin_kernel(family: str, params, horizon: float) -> KernelSpec:
    """Construct a built-in kernel family with analytic derivative handles.

    Families
    --------
    constant [c]
        K = c with c != 0.
    exponential_convolution [lam]
        K(s, t) = exp(-lam (t - s)).
    smooth_bivariate [c, a, b]
        K(s, t) = c (1 + a s) exp(-b (t - s)); genuinely non-convolution
        for a > 0, diagonal bounded below by c.
    fractional [H]
        K(s, t) = (t - s)^(H - 1/2) for a Hurst-type exponent H in (0, 1).
        For H != 1/2 the diagonal is 0 or infinite, so the kernel is
        flagged ``regular=False`` (no diagonal claim); it still simulates,
        the auditor fails it.
    """
    tri = Triangle(horizon=float(horizon))
    if family == "constant":
        (c,) = _as_float(params, 1, family)
        if c == 0:
            raise InvalidParameterError("constant kernel must be nonzero")
        zero = lambda s, t: np.broadcast_arrays(np.asarray(s, float) * 0.0,
                                                np.asarray(t, float) * 0.0)[0]
        return KernelSpec(
            eval_fn=lambda s, t: zero(s, t) + c,
            triangle=tri, d1=zero, d2=zero, d21=zero,
            gamma=0.5, epsilon=1.0, alpha=0.0, diag_lower_bound=abs(c),
            is_convolution=True, convolution_profile=lambda u: np.asarray(u, float) * 0.0 + c,
            name=f"constant({c})")

    if family == "exponential_convolution":
        (lam,) = _as_float(params, 1, family)
        prof = lambda u: np.exp(-lam * np.asarray(u, float))
        return KernelSpec(
            eval_fn=lambda s, t: np.exp(-lam * (np.asarray(t, float) - s)),
            triangle=tri,
            d1=lambda s, t: lam * np.exp(-lam * (np.asarray(t, float) - s)),
            d2=lambda s, t: -lam * np.exp(-lam * (np.asarray(t, float) - s)),
            d21=lambda s, t: -lam * lam * np.exp(-lam * (np.asarray(t, float) - s)),
            gamma=0.5, epsilon=1.0, alpha=0.0, diag_lower_bound=1.0,
            is_convolution=True, convolution_profile=prof,
            name=f"exponential_convolution({lam})")

    if family == "smooth_bivariate":
        c, a, b = _as_float(params, 3, family)
        if c <= 0 or a < 0:
            raise InvalidParameterError("smooth_bivariate needs c > 0 and a >= 0")

        def ev(s, t):
            s = np.asarray(s, float)
            return c * (1.0 + a * s) * np.exp(-b * (np.asarray(t, float) - s))

        def d1(s, t):
            s = np.asarray(s, float)
            e = np.exp(-b * (np.asarray(t, float) - s))
            return c * e * (a + b * (1.0 + a * s))

        def d2(s, t):
            s = np.asarray(s, float)
            return -b * c * (1.0 + a * s) * np.exp(-b * (np.asarray(t, float) - s))

        def d21(s, t):
            s = np.asarray(s, float)
            e = np.exp(-b * (np.asarray(t, float) - s))
            return -b * c * e * (a + b * (1.0 + a * s))

        conv = a == 0.0
        return KernelSpec(
            eval_fn=ev, triangle=tri, d1=d1, d2=d2, d21=d21,
            gamma=0.5, epsilon=1.0, alpha=0.0, diag_lower_bound=c,
            is_convolution=conv,
            convolution_profile=(lambda u: c * np.exp(-b * np.asarray(u, float))) if conv else None,
            name=f"smooth_bivariate({c},{a},{b})")

    if family == "fractional":
        (hurst,) = _as_float(params, 1, family)
        if not 0.0 < hurst < 1.0:
            raise InvalidParameterError(f"fractional exponent must lie in (0, 1), got {hurst}")
        e = hurst - 0.5

        def prof(u):
            u = np.asarray(u, float)
            with np.errstate(divide="ignore"):
                return np.power(u, e)

        def ev(s, t):
            return prof(np.asarray(t, float) - s)

        def d1(s, t):
            u = np.asarray(t, float) - np.asarray(s, float)
            with np.errstate(divide="ignore"):
                return -e * np.power(u, e - 1.0)

        def d2(s, t):
            u = np.asarray(t, float) - np.asarray(s, float)
            with np.errstate(divide="ignore"):
                return e * np.power(u, e - 1.0)

        def d21(s, t):
            u = np.asarray(t, float) - np.asarray(s, float)
            with np.errstate(divide="ignore"):
                return -e * (e - 1.0) * np.power(u, e - 2.0)

        if hurst == 0.5:
            return make_builtin_kernel("constant", [1.0], horizon)
        # diagonal is 0 (H > 1/2) or +inf (H < 1/2): no diagonal claim,
        # outside the audited class either way
        return KernelSpec(
            eval_fn=ev, triangle=tri, d1=d1, d2=d2, d21=d21,
            gamma=min(hurst, 0.5), epsilon=1.0, alpha=0.0,
            diag_lower_bound=0.0, is_convolution=True,
            convolution_profile=prof, regular=False,
            name=f"fractional({hurst})")

    raise InvalidParameterError(
        f"unknown kernel family {family!r} (valid: {', '.join(KERNEL_FAMILIES)})")


def _require(handle, name, kernel_name):
    if handle is None:
        raise MissingDerivativeError(f"kernel {kernel_name!r} does not expose {name}")
    return handle


def _midpoints(a, b, n):
    """n composite-midpoint nodes and the common weight (b - a)/n."""
    h = (b - a) / n
    return a + (np.arange(n) + 0.5) * h, h


def _fit_and_check(ratios_full, coarse_mask, safety, tol, points):
    """Fit C = max ratio on the coarse subset, check safety*C on everything."""
    finite = np.isfinite(ratios_full)
    if not finite.all():
        bad = int(np.argmin(finite))
        return False, float("-inf"), points[bad]
    fit_c = float(ratios_full[coarse_mask].max()) if coarse_mask.any() else 0.0
    bound = safety * fit_c + tol
    worst = int(np.argmax(ratios_full))
    margin = float(bound - ratios_full[worst])
    return bool(ratios_full[worst] <= bound), margin, points[worst]


def audit_assumption_kernels(k_mu: KernelSpec, k_sigma: KernelSpec,
                             resolution: int, tolerances: Optional[dict] = None,
                             safety: float = 1.5) -> AssumptionReport:
    """Numerically audit the kernel regularity conditions on a nested lattice.

    The lattice has ``resolution`` subdivisions per axis (points i*T/resolution),
    so doubling the resolution refines the lattice to a superset.  Conditions:

    * ``d2_mu_bounded``: boundedness of the drift kernel's time derivative
    * ``sigma_diagonal_lower_bound``: |K_sigma(t, t)| >= declared bound
    * ``sigma_holder_integral``: the (2+eps)-integral modulus against
      C |t - s|^(gamma (2+eps)), composite midpoint quadrature
    * ``sigma_derivative_singularity``: |d1| + |d2 diag| + int |d21| against
      C (t - s)^(-alpha)

    Deterministic for fixed inputs; non-finite integrands at interior
    quadrature nodes raise QuadratureError, non-finite point evaluations
    fail the affected condition with the witness attached.
    """
    if resolution < 8:
        raise InvalidParameterError("resolution must be at least 8")
    tol = {c: 1e-9 for c in AUDIT_CONDITIONS}
    tol.update(tolerances or {})

    T = k_sigma.triangle.horizon
    if k_mu.triangle.horizon != T:
        raise InvalidParameterError("kernels live on different triangles")
    d2_mu = _require(k_mu.d2, "d2", k_mu.name)
    d1_sig = _require(k_sigma.d1, "d1", k_sigma.name)
    d2_sig = _require(k_sigma.d2, "d2", k_sigma.name)
    d21_sig = _require(k_sigma.d21, "d21", k_sigma.name)

    pts = np.arange(resolution + 1) * T / resolution
    ss, tt = np.meshgrid(pts, pts, indexing="ij")
    on_tri = ss <= tt
    even = (np.arange(resolution + 1) % 2 == 0)
    coarse2d = np.outer(even, even)
    s_tri, t_tri = ss[on_tri], tt[on_tri]

    checks = []

    # (a) boundedness of d2 K_mu: magnitudes, fitted on the coarse sub-lattice
    vals = np.abs(np.asarray(d2_mu(s_tri, t_tri), float))
    points = list(zip(s_tri, t_tri))
    passed, margin, witness = _fit_and_check(
        vals, coarse2d[on_tri], safety, tol["d2_mu_bounded"], points)
    checks.append(CheckResult("d2_mu_bounded", passed, margin,
                              (float(witness[0]), float(witness[1]))))

    # (b) diagonal lower bound of K_sigma
    diag = np.abs(np.asarray(k_sigma.eval_fn(pts, pts), float))
    if not np.isfinite(diag).all():
        bad = int(np.argmin(np.isfinite(diag)))
        checks.append(CheckResult("sigma_diagonal_lower_bound", False,
                                  float("-inf"), (float(pts[bad]), float(pts[bad]))))
    else:
        worst = int(np.argmin(diag))
        margin = float(diag[worst] - k_sigma.diag_lower_bound)
        checks.append(CheckResult(
            "sigma_diagonal_lower_bound",
            margin >= -tol["sigma_diagonal_lower_bound"],
            margin, (float(pts[worst]), float(pts[worst]))))

    # (c) Hoelder integral condition, midpoint rule over [0, s]
    power = 2.0 + k_sigma.epsilon
    pair_idx = [(i, j) for i in range(1, resolution + 1)
                for j in range(i + 1, resolution + 1)
                if pts[j] - pts[i] >= DIAGONAL_ATOL]
    ratios = np.empty(len(pair_idx))
    pair_pts = []
    pair_coarse = np.empty(len(pair_idx), dtype=bool)
    for m, (i, j) in enumerate(pair_idx):
        s, t = pts[i], pts[j]
        nodes, h = _midpoints(0.0, s, resolution)
        integrand = np.abs(np.asarray(k_sigma.eval_fn(nodes, t), float)
                           - np.asarray(k_sigma.eval_fn(nodes, s), float)) ** power
        if not np.isfinite(integrand).all():
            raise QuadratureError(
                f"holder integrand non-finite inside (0, {s}) at t = {t}")
        ratios[m] = (integrand.sum() * h) / (t - s) ** (k_sigma.gamma * power)
        pair_pts.append((float(s), float(t)))
        pair_coarse[m] = even[i] and even[j]
    if pair_idx:
        passed, margin, witness = _fit_and_check(
            ratios, pair_coarse, safety, tol["sigma_holder_integral"], pair_pts)
    else:
        passed, margin, witness = True, 0.0, (0.0, 0.0)
    checks.append(CheckResult("sigma_holder_integral", passed, margin, witness))

    # (d) weak-singularity bound on the derivative combination
    pair_idx_d = [(i, j) for i in range(resolution + 1)
                  for j in range(i + 1, resolution + 1)
                  if pts[j] - pts[i] >= DIAGONAL_ATOL]
    ratios_d = np.empty(len(pair_idx_d))
    pair_pts_d = []
    pair_coarse_d = np.empty(len(pair_idx_d), dtype=bool)
    for m, (i, j) in enumerate(pair_idx_d):
        s, t = pts[i], pts[j]
        nodes, h = _midpoints(s, t, resolution)
        grad = np.abs(np.asarray(d21_sig(s, nodes), float))
        if not np.isfinite(grad).all():
            raise QuadratureError(
                f"d21 integrand non-finite inside ({s}, {t})")
        lhs = (abs(float(d1_sig(s, t))) + abs(float(d2_sig(s, s)))
               + grad.sum() * h)
        ratios_d[m] = lhs * (t - s) ** k_sigma.alpha
        pair_pts_d.append((float(s), float(t)))
        pair_coarse_d[m] = even[i] and even[j]
    passed, margin, witness = _fit_and_check(
        ratios_d, pair_coarse_d, safety, tol["sigma_derivative_singularity"],
        pair_pts_d)
    checks.append(CheckResult("sigma_derivative_singularity", passed, margin, witness))

    return AssumptionReport(checks=tuple(checks), grid_resolution=resolution,
                            tolerances=tol)
