"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: validation failures exit 2,
numerical/guard failures exit 3, I/O problems (plain OSError) exit 4.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition or file-format contract."""


class ConfigurationError(ValidationError):
    """A lookup table or config file is missing a required entry."""


class GuardError(RuntimeError):
    """A size guard or numerical condition was tripped."""


class SpectrumError(GuardError):
    """Takagi spectrum left the encodable range [0, 1)."""


class InternalConsistencyError(GuardError):
    """An internal invariant failed; indicates a bug upstream, not bad input."""
