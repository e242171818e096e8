"""Exception types shared across the toolkit."""


class AuditError(Exception):
    """Base class for all errors raised by this package."""


class UnitError(AuditError, ValueError):
    """A spectrum carries the wrong unit for the requested operation."""


class SpectrumRangeError(AuditError, ValueError):
    """A requested wavelength lies outside a spectrum's sampled range."""


class BandCoverageError(AuditError, ValueError):
    """Spectra or declared bands fail to cover the required wavelength band."""


class DegenerateEnvelopeError(AuditError, ValueError):
    """Too few local maxima to fit an envelope spline."""


class DegenerateYieldError(AuditError, ValueError):
    """A normalising yield is zero, so the leakage penalty is undefined."""


class DomainError(AuditError, ValueError):
    """A numeric argument lies outside its documented domain."""


class ParseError(AuditError, ValueError):
    """A data file could not be parsed.  Carries path and line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class SchemaError(AuditError, ValueError):
    """A manifest or configuration is structurally incomplete."""


class ComponentResolutionError(AuditError, KeyError):
    """A configuration references a component absent from the library."""


class ConfigError(AuditError, ValueError):
    """An audit configuration value is missing or invalid."""


class InfeasibleStartError(AuditError, RuntimeError):
    """The optimizer could not construct any feasible starting point."""
