"""Exception types raised by the numerical routines."""


class InvalidModelError(ValueError):
    """Model parameters describe an excluded process (e.g. a subordinator)."""


class BracketError(RuntimeError):
    """A root bracket could not be established."""


class RootNotFoundError(BracketError):
    """A bracket that should contain a root shows no sign change."""


class ConvergenceError(RuntimeError):
    """An iterative or series computation failed to converge."""


class SpecError(ValueError):
    """Cost specification is inconsistent with the requested operation."""


class KinkError(ValueError):
    """Derivative requested at a declared non-differentiable point."""
