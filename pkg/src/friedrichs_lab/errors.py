"""Exception hierarchy shared across the package."""


class FriedrichsLabError(Exception):
    """Base class for all package-specific errors."""


class InvalidResolutionError(FriedrichsLabError, ValueError):
    """Grid resolution below the minimum of 2 cells per axis."""


class DegenerateDomainError(FriedrichsLabError, ValueError):
    """Domain with a non-positive side length."""


class DegenerateBaseError(FriedrichsLabError, ArithmeticError):
    """A negative-power base collapsed to zero (collinear sample)."""


class NoConvergenceError(FriedrichsLabError, RuntimeError):
    """Iterative solver hit its iteration cap above tolerance.

    Carries the diagnostics collected so far so callers never have to
    work with a silently bad result.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BracketFailureError(FriedrichsLabError, RuntimeError):
    """Shooting bisection found no sign change in the searched range."""


class AllCollinearError(FriedrichsLabError, ValueError):
    """Every sample in a batch was collinear with the ground state."""


class ZeroAfterProjectionError(FriedrichsLabError, ValueError):
    """Forcing term vanished after projecting out the ground state."""


class ConfigError(FriedrichsLabError, ValueError):
    """Malformed or inconsistent run configuration."""
