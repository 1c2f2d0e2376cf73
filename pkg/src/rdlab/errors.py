"""Exception types shared across the package.

Plain ``ValueError`` is raised for ordinary bad arguments; the classes here
mark conditions the CLI maps to dedicated exit codes.
"""


class ConfigError(ValueError):
    """A run configuration file is malformed or inconsistent."""


class DegenerateModelError(ValueError):
    """The interaction matrix is singular where the requested analysis needs it regular."""


class NumericalFailure(RuntimeError):
    """An iteration or integrator failed to converge within its budget."""


class InvariantViolation(RuntimeError):
    """A computed state broke a guaranteed invariant (e.g. negativity beyond tolerance)."""


class NoCycleError(RuntimeError):
    """A periodic orbit was required but none was detected."""
