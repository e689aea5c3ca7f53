"""Exception hierarchy shared by every wgfrac module."""

from __future__ import annotations


class WgfracError(Exception):
    """Base class for all library errors."""


class DomainError(WgfracError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonConvergence(WgfracError, ArithmeticError):
    """A truncated series did not reach its tolerance within the term budget."""


class EvalError(WgfracError, ArithmeticError):
    """A function could not be evaluated at a point.

    ``location`` is either a node coordinate (sampling) or a source offset
    inside an expression (expression evaluation).
    """

    def __init__(self, message: str, location: float | int | None = None):
        super().__init__(message)
        self.location = location


class ParseError(WgfracError, ValueError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(detail)
        self.offset = offset
        self.expected = expected


class MultipleVariablesError(ParseError):
    pass


class UnsupportedError(WgfracError, NotImplementedError):
    pass


class GridMismatch(WgfracError, ValueError):
    pass


class BoundaryMismatch(WgfracError, ValueError):
    pass


class SingularSystem(WgfracError, ArithmeticError):
    pass


class ConfigError(WgfracError, ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        parts = []
        if key is not None:
            parts.append(f"key {key!r}")
        if line is not None:
            parts.append(f"line {line}")
        prefix = f"[{', '.join(parts)}] " if parts else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line
