"""Exception hierarchy. CLI maps ``InvalidInput`` to exit 2, ``CheckFailed`` to exit 1."""


class GradedLieError(Exception):
    pass


class InvalidInput(GradedLieError, ValueError):
    """Bad parameters or arguments supplied by the caller."""


class CheckFailed(GradedLieError):
    """A mathematical check did not hold."""


# parameter gate
class ParameterError(InvalidInput):
    reason = "invalid parameters"


class MuHalfInteger(ParameterError):
    reason = "excluded: μ in 1/2+Z"


class MuNonzeroInteger(ParameterError):
    reason = "excluded: μ in Z∖{0} (shift the basis to μ=0)"


class TwistedSVExcluded(ParameterError):
    reason = "excluded: λ=μ=0 (twisted Schrödinger-Virasoro algebra)"


# derivations
class NameNotAdmissible(InvalidInput):
    pass


class NotADerivation(CheckFailed):
    pass


class DecompositionFailed(CheckFailed):
    pass


# automorphisms
class ZeroParameter(InvalidInput):
    pass


class FlipRequiresMuZero(InvalidInput):
    pass


class DiagonalRequiresMuZero(InvalidInput):
    pass


class CaseNotAdmissible(InvalidInput):
    pass


class UnsupportedSupport(InvalidInput):
    pass


class WindowOverflow(GradedLieError):
    pass


class NotAutomorphism(CheckFailed):
    pass


class ShapeViolation(CheckFailed):
    pass


class ResidualNotIdentity(CheckFailed):
    pass
