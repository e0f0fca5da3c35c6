"""Exact-arithmetic chains, shadowing and frequent hypercyclicity for linear operators on sequence spaces."""

from .core import Domain, Norm, NormKind, SeqVector, format_rational, parse_rational
from .errors import (CertificateFailure, ChainInvalid, ConfigError, DomainError, InfeasibleCertificate,
                     LinShadowError, ParseError, PseudoOrbitInvalid, UnsupportedCapability)
from .operators import (BilateralShift, Diagonal, DirectSum, DoublingShiftFixedLine, Identity, Operator,
                        PolyFunction, Product, RationalRotation, ScalarMultiple, WeightedBackwardShift,
                        WeightedForwardShift, from_config)
from .chains import Chain, validate_chain
from .shadowing import HyperbolicSolver, PseudoOrbit, RightInverseSolver, validate_pseudo_orbit
from .fhc import build_schedule, construct_fhc_vector

__version__ = "0.1.0"
