"""Exception types raised across the package."""


class BCSCError(Exception):
    pass


class EmptyInputError(BCSCError, ValueError):
    pass


class ShapeError(BCSCError, ValueError):
    pass


class PartitionError(BCSCError, ValueError):
    pass


class BatchError(BCSCError, ValueError):
    pass


class ScheduleError(BCSCError, ValueError):
    pass


class ConfigError(BCSCError, ValueError):
    pass


class IdxFormatError(BCSCError, ValueError):
    pass


class IdxLengthError(IdxFormatError):
    pass


class SummaryError(BCSCError, ValueError):
    pass


class DivergenceError(BCSCError, ArithmeticError):
    """Training produced a non-finite loss or parameter.

    ``epoch`` is 1-based; ``t`` and ``j`` locate the sub-iteration when known.
    """

    def __init__(self, epoch: int, t: int | None = None, j: int | None = None, detail: str = ""):
        self.epoch = epoch
        self.t = t
        self.j = j
        where = f"epoch {epoch}"
        if t is not None:
            where += f", t={t}"
        if j is not None:
            where += f", j={j}"
        msg = f"divergence at {where}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
