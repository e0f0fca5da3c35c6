"""Exception hierarchy shared by every module."""


class LinShadowError(Exception):
    """Base class for all package errors."""


class DomainError(LinShadowError, ValueError):
    """Index domain mismatch or an argument outside its admissible range."""


class ParseError(LinShadowError, ValueError):
    """Malformed rational, vector or config text."""


class ConfigError(LinShadowError, ValueError):
    """Structurally invalid operator or experiment configuration."""


class UnsupportedCapability(LinShadowError):
    """The operator does not declare the capability an operation needs."""


class ChainInvalid(LinShadowError):
    """A proposed chain violates the strict step condition."""

    def __init__(self, index, defect, eps):
        self.index = index
        self.defect = defect
        self.eps = eps
        super().__init__(f"chain step {index}: defect {defect} is not < {eps}")


class PseudoOrbitInvalid(LinShadowError):
    """A proposed pseudo orbit violates the non-strict step condition."""

    def __init__(self, index, defect, delta):
        self.index = index
        self.defect = defect
        self.delta = delta
        super().__init__(f"pseudo-orbit step {index}: defect {defect} exceeds {delta}")


class InfeasibleCertificate(LinShadowError):
    """The requested parameters cannot produce a valid certificate."""


class CertificateFailure(LinShadowError):
    """A certificate was built but one of its checks failed."""


class GammaDefectError(CertificateFailure):
    """A ramped block pseudo orbit broke one of its case bounds."""

    def __init__(self, case, index, detail):
        self.case = case
        self.index = index
        super().__init__(f"case {case} at n={index}: {detail}")


class PropertyViolation(CertificateFailure):
    """A frequently-hypercyclic construction property failed."""

    def __init__(self, p, prop, index, detail=""):
        self.p = p
        self.prop = prop
        self.index = index
        super().__init__(f"class {p}: property ({prop}) fails at n={index} {detail}".rstrip())
