"""Exception hierarchy and the CLI exit-code table."""


class HamSchrodError(Exception):
    """Base class for every error raised by the package."""


class DomainError(HamSchrodError):
    pass


class SchemeError(HamSchrodError):
    pass


class LinearityError(HamSchrodError):
    pass


class ConfigError(HamSchrodError):
    pass


class OrderError(HamSchrodError):
    pass


class GuessError(HamSchrodError):
    pass


class DivergenceError(HamSchrodError):
    pass


class NaNError(HamSchrodError):
    pass


class WrapError(HamSchrodError):
    pass


class EigenFailure(HamSchrodError):
    pass


class EmptyCurveError(HamSchrodError):
    pass


class AllDivergedError(HamSchrodError):
    pass


class ParseError(HamSchrodError):
    """Malformed or unknown input in a config document.

    ``pointer`` is the JSON pointer of the offending location.
    """

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


class ValidationError(HamSchrodError):
    """Collects every violation found in a config document."""

    def __init__(self, violations):
        self.violations = list(violations)
        text = "; ".join(f"{p or '/'}: {m}" for p, m in self.violations)
        super().__init__(text)


EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DIVERGENCE = 2
EXIT_BACKEND = 3

EXIT_CODES = {
    DomainError: EXIT_INPUT,
    SchemeError: EXIT_INPUT,
    LinearityError: EXIT_INPUT,
    ConfigError: EXIT_INPUT,
    OrderError: EXIT_INPUT,
    GuessError: EXIT_INPUT,
    ParseError: EXIT_INPUT,
    ValidationError: EXIT_INPUT,
    EmptyCurveError: EXIT_INPUT,
    DivergenceError: EXIT_DIVERGENCE,
    NaNError: EXIT_DIVERGENCE,
    AllDivergedError: EXIT_DIVERGENCE,
    WrapError: EXIT_BACKEND,
    EigenFailure: EXIT_BACKEND,
    HamSchrodError: EXIT_BACKEND,
}


def exit_code_for(exc):
    for cls in type(exc).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]
    return EXIT_BACKEND
