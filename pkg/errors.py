"""
Exception hierarchy for the coordination runtime
"""

from typing import Optional


class CthaError(Exception):
    """Base class for every error raised by the runtime"""


class ShapeError(CthaError, ValueError):
    """Matrix or vector dimensions do not line up"""


class DomainError(CthaError, ValueError):
    """An argument lies outside the domain of an operation"""


class ContractViolation(CthaError):
    """A documented contract between components was broken"""


class MessageParseError(CthaError, ValueError):
    """Wire bytes could not be decoded into a candidate message"""

    def __init__(self, message: str, offset: Optional[int] = None):
        super().__init__(message if offset is None else f"{message} (at byte {offset})")
        self.offset = offset


class InvalidInputError(CthaError):
    """An input file is unreadable or does not satisfy its schema"""
