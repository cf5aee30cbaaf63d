"""Exception types shared across the package."""


class FlarepotError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(FlarepotError, ValueError):
    """A flare-class label, catalog row, or file could not be parsed."""


class CatalogError(FlarepotError, ValueError):
    """A catalog is empty, degenerate, or in the wrong state for an operation."""


class FitError(FlarepotError, RuntimeError):
    """A maximum-likelihood fit could not be performed on the given data."""
