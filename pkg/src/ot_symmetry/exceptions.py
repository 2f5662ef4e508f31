"""Exception types raised by ot_symmetry."""


class OTSymmetryError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(OTSymmetryError, ValueError):
    pass


class InvalidGroup(OTSymmetryError, ValueError):
    pass


class SphericalZeroVector(OTSymmetryError, ValueError):
    """The spherical sign is undefined when x or h is the zero vector."""


class IncompatibleERD(OTSymmetryError, ValueError):
    pass


class InvalidReference(OTSymmetryError, ValueError):
    """Reference points violate orbit-distinctness or leave the fundamental domain."""


class NonFiniteCost(OTSymmetryError, ValueError):
    pass


class DuplicateNorms(OTSymmetryError, ValueError):
    pass


class TooLarge(OTSymmetryError, ValueError):
    pass


class NotSPD(OTSymmetryError, ValueError):
    pass


class SingularERD(OTSymmetryError, ValueError):
    pass


class SingularCovariance(OTSymmetryError, ValueError):
    pass


class TooFewObservations(OTSymmetryError, ValueError):
    pass


class UnknownScenario(OTSymmetryError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown scenario"


class EmptyGrid(OTSymmetryError, ValueError):
    pass
