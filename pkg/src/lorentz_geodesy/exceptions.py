"""Exception hierarchy shared by all modules."""


class GeodesyError(Exception):
    """Base class for every error raised by this package."""


class ExprSyntaxError(GeodesyError):
    """Malformed expression source.

    Attributes
    ----------
    offset : int
        Byte offset into the source where parsing failed.
    """

    def __init__(self, message, source, offset):
        self.source = source
        self.offset = offset
        super().__init__(f"{message} at offset {offset} in {source!r}")


class UnboundVariableError(GeodesyError):
    pass


class ExprDomainError(GeodesyError, ArithmeticError):
    """Evaluation left the real domain (log of nonpositive, 0 division, ...)."""


class NotDifferentiableError(GeodesyError):
    pass


class DomainViolation(GeodesyError):
    """A point lies outside the open domain of a chart."""


class DegenerateMetricError(GeodesyError):
    pass


class ModelError(GeodesyError):
    """Invalid model parameters or a model lacking a required structure."""


class IntegrationError(GeodesyError):
    pass


class ConfigError(GeodesyError):
    pass
