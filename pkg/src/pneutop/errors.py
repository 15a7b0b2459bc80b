"""Exception types shared across the package."""


class PneutopError(Exception):
    """Base class for package errors."""


class ConfigurationError(PneutopError):
    """Invalid configuration value or inconsistent domain layout."""


class SolverError(PneutopError):
    """A linear solve failed or its solution violates a required bound."""


class StateError(PneutopError):
    """An operation was called before its required state was initialized."""
