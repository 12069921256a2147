"""
Exception hierarchy for scengen.

Each error carries the process exit code the CLI reports for it.
"""


class ScengenError(Exception):
    """Base class for every error the pipeline reports to the user."""

    exit_code = 1


class ConfigError(ScengenError):
    """Invalid run configuration or command-line usage."""

    exit_code = 1


class DataError(ScengenError, ValueError):
    """Unreadable, malformed or degenerate input data or archive."""

    exit_code = 2


class TrainingDivergence(ScengenError, ArithmeticError):
    """A loss or gradient became NaN/Inf during training."""

    exit_code = 3
