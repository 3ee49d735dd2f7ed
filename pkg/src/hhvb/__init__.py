"""Homogeneous holomorphic vector bundles over the unit ball: algebra, kernels, tuples."""
from .bundle import BundleSpec, chain_spec, load_spec, scalar_spec, validate
from .errors import (HhvbError, IndefiniteGram, NotAdmissible, SingularFactorization,
                     SingularLambda, SpecError, UnsupportedDimension)
from .kss_reps import IrrepLabel

__all__ = ["BundleSpec", "chain_spec", "load_spec", "scalar_spec", "validate", "HhvbError",
           "IndefiniteGram", "NotAdmissible", "SingularFactorization", "SingularLambda",
           "SpecError", "UnsupportedDimension", "IrrepLabel"]
__version__ = "0.1.0"
