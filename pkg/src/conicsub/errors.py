"""Exception hierarchy for the subdivision kernel.

``GeometryError`` covers geometric degeneracies discovered while running the
scheme (coincident inputs, unusable configurations).  ``ParseError`` is the
only input-format error; the CLI maps it (and too-few-points found while
parsing) to exit code 1, everything else to exit code 2.
"""


class GeometryError(Exception):
    """Base class for geometric degeneracies."""


class ZeroVector(GeometryError):
    pass


class CoincidentPoints(GeometryError):
    pass


class CoincidentLines(GeometryError):
    pass


class NotCollinear(GeometryError):
    pass


class DegenerateFrame(GeometryError):
    pass


class DegenerateStencil(GeometryError):
    pass


class TooFewPoints(GeometryError):
    pass


class DegenerateConfiguration(GeometryError):
    pass


class PointNotOnConic(GeometryError):
    pass


class CoincidentTangents(GeometryError):
    pass


class NoCandidates(GeometryError):
    pass


class ParameterOutsideRegion(GeometryError):
    pass


class UnsplittableSegment(GeometryError):
    pass


class JunctionConditionError(GeometryError):
    """A convex junction violates the half-plane condition (strict mode)."""


class OppositeLines(GeometryError):
    pass


class TangentApexAtInfinity(GeometryError):
    pass


class GradientVanishes(GeometryError):
    pass


class ProvenanceMismatch(GeometryError):
    pass


class ParseError(Exception):
    """Malformed input text; carries the 1-based line number."""

    def __init__(self, line: int, message: str = "could not parse point"):
        super().__init__(f"line {line}: {message}")
        self.line = line
