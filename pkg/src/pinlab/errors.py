"""Exception hierarchy shared by every pinlab module."""


class PinlabError(Exception):
    """Base class for all errors raised by pinlab."""


class InvalidArgumentError(PinlabError, ValueError):
    """An argument is outside the domain of the operation."""


class DegenerateEnvironmentError(InvalidArgumentError):
    """An environment without any positive charge."""


class InfeasibleStrategyError(PinlabError, ValueError):
    """The hit-every-charge strategy has zero probability on this environment."""


class PreconditionError(PinlabError):
    """A hypothesis of a bound is not satisfied, so the bound cannot be checked."""


class InadmissibleParametersError(PreconditionError):
    """Renormalization or lemma constants fail their admissibility predicates."""


class EmptyRenormalizationError(PinlabError):
    """Every block is a good charge, so the renormalized environment is empty."""


class TruncationOverflowError(PinlabError):
    """Too much probability mass escaped the support truncation."""


class ScanError(PinlabError):
    """The critical-point bisection could not be started."""


class BoundViolationError(PinlabError):
    """A bound failed although all of its hypotheses hold."""


class ConfigError(PinlabError):
    """Malformed experiment configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
