"""Exception hierarchy shared by every module.

Numerical failures carry exit code 3 in the CLI, input problems exit code 2.
"""


class FiberThomaeError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class InvalidInput(FiberThomaeError, ValueError):
    exit_code = 2


class InvalidCurve(InvalidInput):
    """A curve violates one or more invariants.

    ``violations`` lists every problem found, not only the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DuplicateBranchPoint(InvalidCurve):
    pass


class BadShape(InvalidCurve):
    pass


class ShapeMismatch(InvalidInput):
    pass


class SamePoint(InvalidInput):
    pass


class BranchPointEvaluation(InvalidInput):
    pass


class UnsupportedFactor(InvalidInput):
    pass


class CoincidentPoints(InvalidInput):
    pass


class ClearanceViolation(FiberThomaeError):
    pass


class PathClearance(ClearanceViolation):
    pass


class StepUnderflow(FiberThomaeError):
    pass


class RankDeficiency(FiberThomaeError):
    pass


class IllConditioned(FiberThomaeError):
    pass


class QuadratureFailure(FiberThomaeError):
    pass


class BasisJump(FiberThomaeError):
    pass


class PathCollision(FiberThomaeError):
    pass


class NotPositiveDefinite(FiberThomaeError):
    pass


class TruncationOverflow(FiberThomaeError):
    pass


class NearVanishing(FiberThomaeError):
    pass


class FitDiverged(FiberThomaeError):
    pass
