"""Exception types shared across the toolkit."""

from __future__ import annotations


class ProjmapError(Exception):
    """Base class for every error raised by this package."""


class UnknownFrameError(ProjmapError):
    """A frame name was not found in the frame tree."""

    def __init__(self, frame: str):
        super().__init__(f"unknown frame {frame!r}")
        self.frame = frame


class InvalidMeasurementError(ProjmapError, ValueError):
    """A calibration measurement violates its physical constraints."""


class InvalidIntrinsicsError(ProjmapError, ValueError):
    """Pinhole intrinsics violate their constraints."""


class BehindCameraError(ProjmapError, ValueError):
    """A point with non-positive depth cannot be projected."""


class InvalidDepthError(ProjmapError, ValueError):
    """Unprojection requires a strictly positive depth."""


class DimensionMismatchError(ProjmapError, ValueError):
    """Image dimensions are unusable (zero-sized target)."""


class MissingFileError(ProjmapError, FileNotFoundError):
    """A referenced input file does not exist."""

    def __init__(self, path):
        super().__init__(f"missing file: {path}")
        self.path = str(path)


class ParseError(ProjmapError, ValueError):
    """A document is malformed; carries line/field context when known."""

    def __init__(self, reason: str, *, line: int | None = None, field: str | None = None):
        context = ""
        if line is not None:
            context += f" (line {line})"
        if field is not None:
            context += f" (field {field!r})"
        super().__init__(reason + context)
        self.reason = reason
        self.line = line
        self.field = field


class InconsistentKError(ParseError):
    """A camera matrix does not have the pinhole shape (skew, bad bottom row)."""


class UnsupportedEncodingError(ParseError):
    """The point cloud uses an encoding this parser does not support."""
