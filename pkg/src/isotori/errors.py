"""Exception hierarchy.

Every failure raised by the library derives from ``IsotoriError``.  The CLI
maps ``ConfigError`` to exit code 2 and every other ``IsotoriError`` to exit
code 3.
"""


class IsotoriError(Exception):
    """Base class for all library errors."""


class ConfigError(IsotoriError, ValueError):
    pass


class DimensionMismatch(IsotoriError, ValueError):
    pass


class InvalidLoop(IsotoriError, ValueError):
    pass


class PointAtInfinity(IsotoriError):
    pass


class NotLorentzOrthogonal(IsotoriError):
    pass


class NoRealLightlikeEigenvector(IsotoriError):
    pass


class TooFarFromGroup(IsotoriError):
    pass


class DegenerateCircle(IsotoriError):
    pass


class PlaneNotInComplement(IsotoriError):
    pass


class DegenerateQuadruple(IsotoriError):
    pass


class DegenerateInput(IsotoriError):
    pass


class ForbiddenCrossRatio(IsotoriError):
    pass


class SolutionAtInfinity(IsotoriError):
    """The solved fourth point is the point at infinity.

    ``witness`` holds the lightlike vector representing it.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class StepTooSmall(IsotoriError):
    pass


class CoincidentPoints(IsotoriError):
    pass


class NonImmersedSample(IsotoriError):
    pass


class StepFailure(IsotoriError):
    pass


class PoleAtLambdaEqualsM(IsotoriError):
    pass


# Name used by the monodromy routine for the same condition.
SpectralParameterAtPole = PoleAtLambdaEqualsM


class CoincidentVertices(IsotoriError):
    pass


class EigenIndexOutOfRange(IsotoriError, IndexError):
    pass


class EqualSpectralParameters(IsotoriError, ValueError):
    pass


class CubeInconsistency(IsotoriError):
    def __init__(self, message, vertex=None, disagreement=None):
        super().__init__(message)
        self.vertex = vertex
        self.disagreement = disagreement


class InsufficientDirections(IsotoriError, ValueError):
    pass


class InvalidGridMap(IsotoriError, ValueError):
    pass


class ZeroSpectralParameter(IsotoriError, ValueError):
    pass
