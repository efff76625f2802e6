"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class DegreeError(Exception):
    """Base class for all errors raised by degree_engine."""


class ParseError(DegreeError, ValueError):
    """Malformed expression text. ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class UnknownSymbol(ParseError):
    pass


class ArityMismatch(ParseError):
    pass


class DomainError(DegreeError, ArithmeticError):
    """An expression was evaluated outside the domain of one of its functions."""


class NearSingular(DegreeError):
    """|det J| is below the singularity threshold at the queried point."""

    def __init__(self, message: str, point=None, det: float | None = None):
        super().__init__(message)
        self.point = point
        self.det = det


class NearSingularRoot(NearSingular):
    pass


class NotAdmissible(DegreeError):
    """The target is attained (to sampling resolution) on the boundary."""


class BoundaryHit(NotAdmissible):
    pass


class NotAdmissibleHomotopy(NotAdmissible):
    pass


class NotCompactlySupported(NotAdmissible):
    pass


class EscapedBoundary(NotAdmissible):
    pass


class PerturbationExhausted(DegreeError):
    pass


class OracleDisagreement(DegreeError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NonIntegerWinding(DegreeError):
    pass


class MultipleRoots(DegreeError):
    pass


class CertificateInconsistent(DegreeError):
    """Two computations that must agree by theory did not."""


class NoCertificate(DegreeError):
    """A solver could not conclude existence."""


class ZeroDegree(NoCertificate):
    pass


class Inconclusive(NoCertificate):
    pass


class PathLost(DegreeError):
    def __init__(self, message: str, degree: int | None = None):
        super().__init__(message)
        self.degree = degree


class HypothesisViolated(DegreeError):
    pass


class TrivialBranchViolation(DegreeError):
    pass


class RegularityFailure(DegreeError):
    pass


class UnmatchedEndpoint(DegreeError):
    pass


class PairingViolation(DegreeError):
    def __init__(self, message: str, component: int | None = None):
        super().__init__(message)
        self.component = component
