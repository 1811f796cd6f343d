"""Exception hierarchy shared by all tautcalc modules.

The CLI maps these onto its exit codes: parse errors exit 2, degree/space
errors exit 3, verification failures exit 4, unsupported operations exit 5.
"""


class CalcError(Exception):
    """Base class for all calculator errors."""


class SpaceError(CalcError):
    """Invalid marked space, mismatched spaces, or bad marking labels."""


class DegreeError(CalcError):
    """Codimension/degree bookkeeping violated (e.g. non-top-degree integrand)."""


class UnstableDivisorError(DegreeError):
    """A boundary divisor id names the zero class (unstable (h, P) choice)."""


class UnsupportedError(CalcError):
    """Operation outside the supported range (genus gate, vertex kappa, ...)."""


class UnresolvedDecorationError(UnsupportedError):
    """A vertex decoration with no registered class expansion was required."""


class ExprParseError(CalcError):
    """Expression text does not match the grammar.

    ``position`` is the 0-based offset into the input where scanning failed.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position
