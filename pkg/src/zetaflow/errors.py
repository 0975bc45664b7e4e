"""Exception types shared across the package."""


class ZetaflowError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ZetaflowError):
    """A file could not be parsed (bad header, counts, or token)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class ValidationError(ZetaflowError):
    """Input violates a structural invariant (mesh, metric, or field).

    ``index`` identifies the offending simplex (vertex, edge or face index)
    when one can be named.
    """

    def __init__(self, message, index=None):
        if index is not None:
            message = f"{message} (simplex {index})"
        super().__init__(message)
        self.index = index


class NumericalError(ZetaflowError):
    """A numerical guard or tolerance was breached (stability, tail bound,
    quadrature non-convergence)."""
