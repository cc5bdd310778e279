"""Typed errors shared across the package.

The CLI maps each class to a distinct exit code, so library code should
raise these rather than bare ValueError for user-facing failures.
"""


class ConfigError(ValueError):
    """A config document could not be parsed into a valid experiment."""


class ConstraintError(ValueError):
    """An operation's domain constraints are violated (no silent clamping)."""
