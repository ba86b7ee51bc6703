"""Exception types raised across the toolkit."""


class SvekitError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SvekitError):
    """A kernel was evaluated outside the triangle 0 <= s <= t <= T."""


class InvalidParameterError(SvekitError):
    """Constructor arguments outside the documented domain."""


class MissingDerivativeError(SvekitError):
    """An operation needs a derivative handle the kernel does not expose."""


class QuadratureError(SvekitError):
    """An integrand was non-finite at an interior quadrature node."""


class IncompatibleGridError(SvekitError):
    """Grids do not nest (different horizon, base, or coarse > fine)."""


class NonFiniteValueError(SvekitError):
    """A simulated value became NaN or infinite.

    Carries the first offending step index, the path index within the run,
    and the partial path up to (and including) the bad step for diagnostics.
    """

    def __init__(self, step, path, partial):
        self.step = step
        self.path = path
        self.partial = partial
        super().__init__(
            f"non-finite value at step {step} (path {path}); "
            "configuration is outside the supported regime or a bug")


class DegenerateGridError(SvekitError):
    """All spatial grid points coincide."""


class DegenerateFitError(SvekitError):
    """Regression input is degenerate (zero increment moments)."""


class InsufficientPathsError(SvekitError):
    """Too few paths for the requested estimator."""


class ConstructionError(SvekitError):
    """A mollifier violated its pointwise bound after normalization."""


class DivergenceAuditError(SvekitError):
    """The reciprocal-square integral failed the divergence audit."""


class RootNotBracketedError(SvekitError):
    """Threshold root fell below the floating-point range."""


class MissingAuxError(SvekitError):
    """A path was simulated without the auxiliary integral arrays."""


class IdenticalConfigError(SvekitError):
    """The coupling test needs two distinct scheme configurations."""


class NotConvolutionError(SvekitError):
    """Lag-table weights requested for a non-convolution kernel."""


class ConfigValidationError(SvekitError):
    """Experiment config failed validation; carries every error found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" +
                         "\n".join(f"  - {e}" for e in self.errors))


class AssumptionWarning(UserWarning):
    """A kernel outside the audited regularity class is in use."""
