"""Exception hierarchy shared by every stage of the pipeline."""


class BradyError(Exception):
    """Base class for all errors raised by bradyquant."""


# -- input / parsing ---------------------------------------------------------


class MalformedInput(BradyError, ValueError):
    pass


class LandmarkCountError(MalformedInput):
    def __init__(self, frame, count):
        self.frame = frame
        self.count = count
        super().__init__(f"frame {frame}: expected 21 landmarks, got {count}")


class TimestampError(MalformedInput):
    def __init__(self, frame, message):
        self.frame = frame
        super().__init__(f"frame {frame}: {message}")


class MissingMetadata(MalformedInput):
    pass


# -- signal / features -------------------------------------------------------


class DegenerateFrame(BradyError, ValueError):
    def __init__(self, message, frame=None):
        self.frame = frame
        if frame is not None:
            message = f"frame {frame}: {message}"
        super().__init__(message)


class InvalidFilterConfig(BradyError, ValueError):
    pass


class NoCyclesDetected(BradyError, ValueError):
    pass


class InsufficientCycles(BradyError, ValueError):
    pass


# -- models ------------------------------------------------------------------


class InvalidConfig(BradyError, ValueError):
    pass


class ShapeMismatch(BradyError, ValueError):
    pass


class DegenerateDataset(BradyError, ValueError):
    pass


class ClassTooSmall(BradyError, ValueError):
    pass


class ModelFileError(BradyError, ValueError):
    """Model container failed a version or checksum check."""


class NonConvergence(BradyError, RuntimeError):
    def __init__(self, message, history=None):
        self.history = history or []
        super().__init__(message)


class SeparationDetected(UserWarning):
    """Some coefficient ran past the clamp bound during fitting."""


class DegenerateGroups(BradyError, ValueError):
    pass


class LengthMismatch(BradyError, ValueError):
    pass


class SingleClass(BradyError, ValueError):
    pass


class InvalidProfile(BradyError, ValueError):
    pass


class ConfigError(BradyError, ValueError):
    pass


class MissingArtifact(BradyError, FileNotFoundError):
    pass
