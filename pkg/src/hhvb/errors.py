"""Exception types shared across the package."""


class HhvbError(Exception):
    """Base class for errors raised by this package."""


class SingularFactorization(HhvbError):
    """The bottom-right entry of g·exp(z) is (numerically) zero."""


class UnsupportedDimension(HhvbError):
    """Non-scalar K-types are only implemented for n <= 2."""


class NotAdmissible(HhvbError):
    """The target irrep does not occur in p⁻ ⊗ source."""


class DimensionMismatch(HhvbError):
    pass


class DegenerateTest(HhvbError):
    pass


class SingularLambda(HhvbError):
    """A path coefficient has a vanishing denominator factor.

    ``factors`` lists ``(path, k, value)`` for each offending factor.
    """

    def __init__(self, msg, factors=()):
        super().__init__(msg)
        self.factors = list(factors)


class IndefiniteGram(HhvbError):
    def __init__(self, msg, eigenvalue):
        super().__init__(msg)
        self.eigenvalue = eigenvalue


class NonDiagonalExpansion(HhvbError):
    pass


class ShapeMismatch(HhvbError):
    pass


class UnknownIdentity(HhvbError):
    pass


class SpecError(HhvbError):
    """Malformed bundle spec file."""
