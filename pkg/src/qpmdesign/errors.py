"""Exception types shared across the package."""

__all__ = [
    "QpmError",
    "ValidityWindowError",
    "PhaseMatchedProcessError",
    "ConfigError",
]


class QpmError(ValueError):
    """Base class for toolkit errors."""


class ValidityWindowError(QpmError):
    """Frequency or wavelength outside a dispersion model's validity window."""


class PhaseMatchedProcessError(QpmError):
    """The process has no phase mismatch, so poling is undefined."""


class ConfigError(QpmError):
    """Invalid run configuration; carries the offending field name."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
