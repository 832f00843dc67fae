class ForesightError(Exception):
    pass


class ShapeError(ForesightError, ValueError):
    pass


class ContractError(ForesightError, ValueError):
    pass


class ScenarioError(ForesightError):
    pass


class CheckpointFormatError(ForesightError):
    pass


class DivergenceError(ForesightError, RuntimeError):
    """Raised when a training loss turns NaN/Inf.

    Carries the last checkpoint whose parameters were still finite so callers can
    persist it before exiting.
    """

    def __init__(self, message: str, step: int, last_good=None):
        super().__init__(message)
        self.step = step
        self.last_good = last_good


class FrozenParameterError(ForesightError, AssertionError):
    pass


class UsageError(ForesightError):
    pass


class MissingInputError(ForesightError):
    pass
