"""Exception hierarchy shared by all beamwatch modules."""

from __future__ import annotations


class BeamwatchError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(BeamwatchError, ValueError):
    """Two masks (or a mask and a camera) disagree on resolution."""


class EmptyMaskError(BeamwatchError, ValueError):
    """An operation needs at least one foreground pixel."""


class EmptyContourError(BeamwatchError, ValueError):
    """A distance was requested for a contour with no points."""


class ParameterError(BeamwatchError, ValueError):
    """A numeric or named parameter is outside its allowed domain."""


class ConfigError(BeamwatchError):
    """Invalid scenario configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class AlignmentError(BeamwatchError):
    """Prediction and ground-truth streams do not line up."""


class StreamGapError(BeamwatchError):
    """A mask stream is missing a frame."""

    def __init__(self, frame_index: int, message: str = "missing frame"):
        self.frame_index = frame_index
        super().__init__(f"frame {frame_index}: {message}")
