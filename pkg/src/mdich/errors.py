"""Exception hierarchy.

Every domain error derives from :class:`MdichError`, whose class name is what the
CLI prints when it exits with status 5. Cap breaches derive from
:class:`CapExceeded` and map to exit status 3 instead.
"""

from __future__ import annotations


class MdichError(ValueError):
    """Base class for all domain errors raised by this package."""


# metric-core
class SymmetryError(MdichError):
    pass


class ZeroOffDiagonal(MdichError):
    pass


class TriangleViolation(MdichError):
    def __init__(self, triple, message=None):
        self.triple = tuple(int(t) for t in triple)
        i, j, k = self.triple
        super().__init__(message or f"d({i},{k}) > d({i},{j}) + d({j},{k}) for triple {self.triple}")


class IndexOutOfRange(MdichError):
    pass


class DuplicateIndex(MdichError):
    pass


class SizeMismatch(MdichError):
    pass


class TooSmall(MdichError):
    pass


class MalformedInput(MdichError):
    pass


# tree-metrics
class InvalidTree(MdichError):
    pass


class TooFewLeaves(MdichError):
    pass


class NotLacunary(MdichError):
    pass


class BadParameters(MdichError):
    pass


# extraction
class PrefixDominanceViolated(MdichError):
    pass


class NotIncreasing(MdichError):
    pass


class AlphaTooSmall(MdichError):
    pass


class KTooSmall(MdichError):
    pass


class TripleTooFlat(MdichError):
    def __init__(self, triple, ratio):
        self.triple = tuple(int(t) for t in triple)
        self.ratio = float(ratio)
        super().__init__(f"triple {self.triple} has aspect ratio {self.ratio:.6g}, below the required k")


class NotBinary(MdichError):
    pass


class SeparationTooSmall(MdichError):
    pass


class CertMismatch(MdichError):
    pass


class IncompleteColoring(MdichError):
    pass


class VerificationError(MdichError):
    """A result failed to re-verify its own certificate or guarantee."""


# instances
class DegenerateFactor(MdichError):
    pass


class DisconnectedGraph(MdichError):
    pass


class TriesExhausted(MdichError):
    pass


class HypothesisViolated(MdichError):
    pass


class FourPointViolation(MdichError):
    def __init__(self, quadruple, message=None):
        self.quadruple = tuple(quadruple)
        super().__init__(message or f"four-point inequality fails on {self.quadruple}")


# caps
class CapExceeded(MdichError):
    pass


class SizeCapExceeded(CapExceeded):
    pass
