"""Exception types shared across the package."""


class SelectgenError(Exception):
    """Base class for all package-specific errors."""


class AllMaskedError(SelectgenError):
    """A selection mask with no selected position reached a consumer that
    requires at least one (the masked-attention denominator would vanish)."""


class NonScalarLoss(SelectgenError):
    """backward() was handed a tensor that is not a scalar."""


class NonFiniteGradient(SelectgenError):
    """A parameter gradient contains NaN or Inf."""


class NonFiniteLoss(SelectgenError):
    """A training loss evaluated to NaN or Inf."""


class EnumerationTooLarge(SelectgenError):
    """Exact enumeration over selection masks was requested for a source
    longer than the supported limit."""


class ParseError(SelectgenError):
    """A corpus or config file is malformed; message names the location."""


class LengthExceeded(SelectgenError):
    """A sequence exceeds the configured maximum length."""


class ConfigError(SelectgenError):
    """A run configuration is invalid (missing/unknown/ill-typed keys)."""
