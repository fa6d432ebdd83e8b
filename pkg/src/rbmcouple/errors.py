"""Exception hierarchy.

Everything derives from ``CouplingError`` so callers (and the CLI) can
separate simulation failures from programming errors.
"""


class CouplingError(Exception):
    pass


class InvalidInput(CouplingError, ValueError):
    """Precondition violated by the caller."""


# geometry
class ParallelLines(InvalidInput):
    pass


class CoincidentPoints(InvalidInput):
    pass


class NotOnBoundary(InvalidInput):
    pass


class CornerPoint(InvalidInput):
    pass


# noise
class ZeroRadius(InvalidInput):
    pass


class ClockOutOfRange(InvalidInput):
    pass


# reflect / cone / ltmeasure
class StartOutsideDomain(InvalidInput):
    pass


class DegenerateInput(InvalidInput):
    pass


class IndexOutOfRange(InvalidInput, IndexError):
    pass


class AngleOutOfRange(InvalidInput):
    pass


class EmptyMeasure(InvalidInput):
    pass


class GridMismatch(InvalidInput):
    pass


# mirror
class AsymmetricStart(InvalidInput):
    pass


class MirrorParallelBoundary(InvalidInput):
    pass


class StartOnBoundary(InvalidInput):
    pass


class WrongDomain(InvalidInput):
    pass


# stripmap
class ParameterOutOfRange(InvalidInput):
    pass


class OutsideWedge(InvalidInput):
    pass


class VertexSingularity(InvalidInput):
    pass


class RadiusOutOfRange(InvalidInput):
    pass


# harness
class InvalidConfig(InvalidInput):
    pass
