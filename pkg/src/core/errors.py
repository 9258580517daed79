"""
Errors - FAQ Engine Failure Modes
Every failure carries the CLI exit code it maps to
"""
from typing import Optional


class FAQError(ValueError):
    """Base error. exit_code: 1 user error, 2 structural, 3 size cap."""

    exit_code = 1


# USER ERRORS (exit 1)
class QuerySyntaxError(FAQError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class UnknownNameError(FAQError):
    pass


class CarrierMismatchError(FAQError):
    pass


class UnknownReductionError(FAQError):
    pass


class InvalidOrderingError(FAQError):
    pass


class OrderingRejectedError(FAQError):
    pass


class InvalidDecompositionError(FAQError):
    def __init__(self, message: str, edge: Optional[object] = None, vertex: Optional[int] = None):
        self.edge = edge
        self.vertex = vertex
        super().__init__(message)


class FactorDataError(FAQError):
    pass


# STRUCTURAL ERRORS (exit 2)
class NotBetaAcyclicError(FAQError):
    exit_code = 2


class InfeasibleCoverError(FAQError):
    exit_code = 2

    def __init__(self, vertex: int):
        self.vertex = vertex
        super().__init__(f"vertex {vertex} lies in no edge")


class UnsupportedQueryError(FAQError):
    exit_code = 2


class InvariantViolationError(FAQError):
    exit_code = 2


# SIZE CAPS (exit 3)
class SizeLimitError(FAQError):
    exit_code = 3

    def __init__(self, what: str, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"{what}: {size} exceeds cap {cap}")
