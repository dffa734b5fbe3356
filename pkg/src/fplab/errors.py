"""Exception hierarchy shared by all fplab modules."""


class FplabError(Exception):
    """Base class for library errors."""


class SpectrumError(FplabError, ValueError):
    pass


class NonPositiveSize(SpectrumError):
    pass


class NegativeMass(SpectrumError):
    pass


class DuplicateKey(SpectrumError):
    pass


class DivergentAtX(SpectrumError):
    pass


class PreGelTime(SpectrumError):
    pass


class ZeroFirstMoment(SpectrumError):
    pass


class EmptySpectrum(SpectrumError):
    pass


class OutOfRange(FplabError, ValueError):
    pass


class OutOfDomain(FplabError, ValueError):
    pass


class InvalidWindow(FplabError, ValueError):
    pass


class NoRoot(FplabError, ArithmeticError):
    pass


class NumericFailure(FplabError, ArithmeticError):
    """Integration failed a self-consistency check (maps to CLI exit code 3)."""


class NegativeMassDetected(NumericFailure):
    pass


class StepSizeTooCoarse(NumericFailure):
    pass


class ControlSingularity(NumericFailure):
    pass


class BurnBeforeAnyGiant(FplabError, UserWarning):
    """Warning category: a prescribed burn arrived while no giant existed."""


class EmptyAfterRounding(FplabError, ValueError):
    pass


class EmptyWindow(FplabError, ValueError):
    pass


class InsufficientEvents(FplabError, RuntimeError):
    pass


class ConfigError(FplabError, ValueError):
    """Invalid user configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class ParseError(ConfigError):
    """Malformed configuration text; carries the 1-based ``line`` when known."""

    def __init__(self, field, message, line=None):
        super().__init__(field, message if line is None else f"{message} (line {line})")
        self.line = line
