"""Exception hierarchy shared by the solvers and the CLI."""


class TrainSepError(Exception):
    """Base class for all package errors."""


class NoRoot(TrainSepError):
    pass


class DegenerateSpeeds(TrainSepError):
    pass


class OutOfRange(TrainSepError):
    pass


class NearSingular(TrainSepError):
    pass


class NotLongHaul(TrainSepError):
    pass


class Diverged(TrainSepError):
    pass


class Infeasible(TrainSepError):
    pass


class ModeCycling(TrainSepError):
    pass


class NonpositiveSectionTime(TrainSepError):
    pass


class InfeasibleIterate(TrainSepError):
    pass


class StepInfeasible(TrainSepError):
    pass


class NegativeVarianceTerm(TrainSepError):
    pass


class TableError(TrainSepError):
    pass


class Unsupported(TableError):
    pass


class DanglingReference(TableError):
    pass


class Incomplete(TableError):
    pass


class LengthMismatch(TableError):
    pass


class ConfigError(TrainSepError):
    """Malformed or inconsistent input file."""


class SegmentError(TrainSepError):
    """A solver failure tagged with the train and segment that caused it."""

    def __init__(self, train, segment, cause):
        self.train = train
        self.segment = segment
        self.cause = cause
        super().__init__(f"train {train}, segment {segment}: {cause}")
