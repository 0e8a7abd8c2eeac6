"""Exception hierarchy shared across the stack."""


class TeleopsimError(Exception):
    """Base class for all package errors."""


class ConfigError(TeleopsimError):
    """A config file is malformed or internally inconsistent."""


class ValidationError(TeleopsimError):
    """A value violates a documented invariant."""
