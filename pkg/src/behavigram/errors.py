"""Exception hierarchy.

Every error raised by the toolkit derives from :class:`BehavigramError`, so
callers (and the command line) can catch one type.  Data-shaped errors also
derive from :class:`ValueError`.
"""


class BehavigramError(Exception):
    """Base class for all toolkit errors."""


class MalformedFile(BehavigramError, ValueError):
    """A session file could not be parsed.

    ``path`` and ``line`` (1-based, header is line 1) locate the fault when
    known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = str(path)
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class MissingFile(MalformedFile):
    pass


class NonMonotoneTimestamps(MalformedFile):
    pass


class GazeOutOfRange(MalformedFile):
    pass


class EmptySeries(BehavigramError, ValueError):
    pass


class InsufficientOverlap(BehavigramError, ValueError):
    pass


class ZeroVariance(BehavigramError, ValueError):
    pass


class InvalidSpec(BehavigramError, ValueError):
    pass


class NonUniformSeries(BehavigramError, ValueError):
    pass


class GridMismatch(BehavigramError, ValueError):
    pass


class InsufficientCalibration(BehavigramError, ValueError):
    pass


class InvertedCalibration(BehavigramError, ValueError):
    pass


class NoCalibrationSource(BehavigramError, ValueError):
    pass


class EmptyWindow(BehavigramError, ValueError):
    pass


class OutOfRange(BehavigramError, ValueError):
    pass


class AllMissing(BehavigramError, ValueError):
    pass


class NoPhaseMarkers(BehavigramError, ValueError):
    pass


class EmptyInterval(BehavigramError, ValueError):
    pass


class EmptyRange(BehavigramError, ValueError):
    pass


class NoSyncSegment(BehavigramError, ValueError):
    pass


class ConfigError(BehavigramError, ValueError):
    pass
