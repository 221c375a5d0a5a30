"""Exception types shared across the package.

Both types subclass ValueError so callers that do not care about the
distinction can catch a single built-in class.  The CLI maps them to
distinct exit codes (config -> 3, precondition -> 4).
"""


class ConfigError(ValueError):
    """Malformed configuration: kernel specs, config files, CLI values."""


class PreconditionError(ValueError):
    """A numeric precondition of an operation does not hold."""
