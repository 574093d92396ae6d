from __future__ import annotations

from typing import Optional


class CptpError(Exception):
    """Base error; `exit_code` is what the CLI returns when it escapes a command."""

    exit_code: int = 1


class InvalidArgumentError(CptpError, ValueError):
    exit_code = 3


class PreconditionError(CptpError):
    exit_code = 3


class ParseError(CptpError):
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class InfeasibleError(CptpError):
    exit_code = 4


class UnboundedError(CptpError):
    # the attainment assumption fails, so this is a precondition violation
    exit_code = 3

    def __init__(self, message: str, direction=None):
        self.direction = direction
        super().__init__(message)


class ResourceLimitError(CptpError):
    exit_code = 5
