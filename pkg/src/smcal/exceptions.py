"""Error types shared across the package.

All data/shape problems derive from :class:`ValidationError` so callers (and
the CLI) can distinguish bad inputs from optimizer failures.
"""


class ValidationError(ValueError):
    """Input data violates a documented invariant."""


class ParseError(ValidationError):
    """A file could not be parsed; the message names the offending row/column."""


class OverlapError(ValidationError):
    """A propensity score touches 0 or 1, breaking strict overlap."""


class DegenerateBaselineError(ValidationError):
    """The requested baseline cannot be computed (e.g. no control subjects)."""


class DegenerateProblemError(ValueError):
    """The pairwise problem has no information to fit on."""


class InvalidCoordinateError(ValueError):
    """A coordinate-indexed operation was asked for the anchor coordinate."""


class DivergenceError(RuntimeError):
    """The optimizer produced a non-finite iterate; the message names the sweep."""
