"""Exception types raised by hybridcran."""


class HybridCranError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(HybridCranError, ValueError):
    """A configuration or model parameter is outside its valid range."""


class DomainError(HybridCranError, ValueError):
    """A functional was evaluated outside its domain (e.g. singular covariance)."""


class NumericalError(HybridCranError, ArithmeticError):
    """A factorization or iteration broke down numerically."""


class InfeasibleStartError(HybridCranError, ValueError):
    """The starting point handed to the barrier solver is not strictly feasible."""
