"""Shared exception bases. Module-specific errors subclass these so the CLI
can map failures to exit codes (config -> 2, data -> 3)."""


class PercompError(Exception):
    """Base for all package errors."""


class ConfigError(PercompError):
    """Invalid configuration or CLI arguments."""


class DataError(PercompError):
    """Invalid or inconsistent runtime data."""
