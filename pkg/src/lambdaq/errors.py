"""Exception types shared across the front end, interpreter and analyzer."""

from __future__ import annotations


class LambdaQError(Exception):
    """Base class for every error raised by this package."""


class PositionedError(LambdaQError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class SyntaxError_(PositionedError):
    """Malformed input text."""


# Keep the public name readable without shadowing the builtin inside modules.
ParseError = SyntaxError_


class UnsupportedConstruct(PositionedError):
    """A JavaScript feature outside the accepted subset."""


class DesugarError(PositionedError):
    """The program parsed but cannot be lowered to queue primitives."""


class ModelArityError(PositionedError):
    """An I/O model was called without its callback argument."""


class DuplicateModel(LambdaQError):
    pass


class StuckConfiguration(LambdaQError):
    """No reduction rule applies to a non-terminal configuration."""


class BoundExceeded(LambdaQError):
    """A schedule branch dispatched more callbacks than the exploration bound."""
