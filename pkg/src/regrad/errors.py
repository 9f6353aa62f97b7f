"""Exception hierarchy shared by all regrad modules."""


class RegradError(Exception):
    """Base class for every error raised by regrad."""


# -- setup algebra ------------------------------------------------------------

class SetupSyntaxError(RegradError):
    def __init__(self, text: str, pos: int, expected: str):
        self.text = text
        self.pos = pos
        self.expected = expected
        super().__init__(f"at position {pos} in {text!r}: expected {expected}")


class DuplicateSlitError(RegradError):
    pass


class TooFewSlits(RegradError):
    pass


# -- theories -----------------------------------------------------------------

class UnknownSlit(RegradError):
    pass


class TableMiss(RegradError):
    pass


class TooManySlits(RegradError):
    pass


class BadDistribution(RegradError):
    pass


# -- functional analysis ------------------------------------------------------

class BadTolerance(RegradError):
    pass


class NonFunctional(RegradError):
    """A sampled combinator maps (nearly) equal keys to different values."""

    def __init__(self, message: str, witness=None):
        self.witness = witness
        super().__init__(message)


class EvaluationGap(RegradError):
    pass


# -- regraduation -------------------------------------------------------------

class SingularSystem(RegradError):
    pass


class NotAssociative(RegradError):
    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class NonMonotone(RegradError):
    pass


class DomainEscape(RegradError):
    def __init__(self, message: str, values=()):
        self.values = list(values)
        super().__init__(message)


# -- scenario files -----------------------------------------------------------

class ScenarioError(RegradError):
    pass


class ParseError(ScenarioError):
    def __init__(self, path, line: int, column: int, msg: str):
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {msg}")


class SchemaError(ScenarioError):
    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class DependencyError(ScenarioError):
    pass
