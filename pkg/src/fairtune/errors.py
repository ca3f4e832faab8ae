"""Exception types shared across the pipeline."""


class FairtuneError(Exception):
    """Base class for all pipeline errors."""


# --- tabular ---------------------------------------------------------------

class EmptyFileError(FairtuneError):
    """CSV source contains no header row."""


class RaggedRowError(FairtuneError):
    def __init__(self, row_index: int, expected: int, got: int):
        self.row_index = row_index
        super().__init__(
            f"row {row_index} has {got} fields, header has {expected}"
        )


class DuplicateHeaderError(FairtuneError):
    """Header contains a repeated or empty column name."""


class TooFewRowsError(FairtuneError):
    pass


class UnknownColumnError(FairtuneError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no column named {name!r}")


class EmptyTableError(FairtuneError):
    pass


class TooManyGroupsError(FairtuneError):
    pass


# --- advisor ---------------------------------------------------------------

class NoBinaryColumnError(FairtuneError):
    """No column with exactly two distinct values; target cannot be chosen."""


class NoSensitiveCandidateError(FairtuneError):
    """No non-target column usable as a sensitive attribute."""


class SameColumnError(FairtuneError):
    pass


class NonBinaryTargetError(FairtuneError):
    pass


# --- preprocess ------------------------------------------------------------

class SingleGroupError(FairtuneError):
    pass


class SchemaMismatchError(FairtuneError):
    pass


# --- model -----------------------------------------------------------------

class DegenerateLabelsError(FairtuneError):
    """Training labels contain a single class."""


class NonFiniteLossError(FairtuneError):
    def __init__(self, step: int, where: str = "epoch"):
        self.step = step
        super().__init__(f"loss became non-finite at {where} {step}")


class DimensionMismatchError(FairtuneError):
    pass


# --- report ----------------------------------------------------------------

class SplitMismatchError(FairtuneError):
    """Baseline and fair evaluations come from different test splits."""


# --- tuner -----------------------------------------------------------------

class BuilderFailureError(FairtuneError):
    def __init__(self, strength: float, cause: Exception):
        self.strength = strength
        self.cause = cause
        super().__init__(f"builder failed at strength {strength}: {cause}")
