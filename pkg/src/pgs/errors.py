"""Exception types raised across the package."""


class PGSError(ValueError):
    """Base class for all library errors."""


class EmptyMap(PGSError):
    pass


class NoCandidates(PGSError):
    pass


class TrajectoryTooShort(PGSError):
    pass


class LabelAbsent(PGSError):
    pass


class LengthMismatch(PGSError):
    pass


class HorizonMismatch(PGSError):
    pass


class DegenerateDistance(PGSError):
    pass


class ParseError(PGSError):
    """Malformed input file. ``path`` is the JSON field path, ``line`` the text line if known."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        where = []
        if path:
            where.append(f"field {path}")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


class ValidationError(PGSError):
    """Input parsed but violates a documented invariant."""
