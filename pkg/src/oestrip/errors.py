"""Exception hierarchy.

Every failure raised by the library derives from :class:`OEStripError`.  The
CLI maps :class:`ConfigError` to exit status 2 and :class:`NumericalFailure`
to exit status 3.
"""


class OEStripError(Exception):
    pass


class ConfigError(OEStripError, ValueError):
    pass


class NumericalFailure(OEStripError):
    pass


class SingularMatrix(NumericalFailure):
    pass


class BranchPointTooClose(NumericalFailure):
    pass


class DeformationFailed(NumericalFailure):
    pass


class TruncationTooLow(NumericalFailure):
    pass


class DenominatorVanishes(NumericalFailure):
    pass


class BranchJump(NumericalFailure):
    pass


class IndexMismatch(NumericalFailure):
    pass


class AtBranchPoint(NumericalFailure):
    pass


class DegenerateP(NumericalFailure):
    pass


class ChartOverflow(NumericalFailure):
    pass


class PoleTooClose(NumericalFailure):
    pass


class StepUnderflow(NumericalFailure):
    pass


class CoincidentWavenumbers(NumericalFailure):
    pass


class SolveFailed(NumericalFailure):
    pass


class DomainError(NumericalFailure, ValueError):
    pass
