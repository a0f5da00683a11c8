"""Exception hierarchy shared by all wristhrv modules."""


class WristHrvError(Exception):
    """Base class for every error raised by this package."""


class MalformedLine(WristHrvError, ValueError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        msg = f"malformed line {line_no}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NonMonotonicTimestamp(WristHrvError, ValueError):
    def __init__(self, line_no: int):
        self.line_no = line_no
        super().__init__(f"timestamp not strictly increasing at line {line_no}")


class EmptyStream(WristHrvError, ValueError):
    pass


class InsufficientSamples(WristHrvError, ValueError):
    pass


class InsufficientData(WristHrvError, ValueError):
    pass


class LengthMismatch(WristHrvError, ValueError):
    pass


class DegenerateVariance(WristHrvError, ValueError):
    pass


class EmptyInput(WristHrvError, ValueError):
    pass


class InvalidDf(WristHrvError, ValueError):
    pass


class InvalidConfig(WristHrvError, ValueError):
    pass


class IoFailure(WristHrvError, OSError):
    pass


class InsufficientHistory(WristHrvError, ValueError):
    pass


class ShapeMismatch(WristHrvError, ValueError):
    pass


class EmptyBatch(WristHrvError, ValueError):
    pass


class TooFewSamples(WristHrvError, ValueError):
    pass


class CorruptFile(WristHrvError, ValueError):
    pass


class VersionMismatch(WristHrvError, ValueError):
    pass
