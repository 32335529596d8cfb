"""Exception types shared across the package."""


class SturmSpecError(Exception):
    """Base class for all package errors."""


class NoSignChange(SturmSpecError):
    """Root bracket endpoints do not have opposite signs."""


class NonFinite(SturmSpecError):
    """A function evaluation produced NaN or infinity."""


class NotPrimitive(SturmSpecError):
    """Matrix is not primitive (no power up to the cap is positive)."""


class PrecisionExhausted(SturmSpecError):
    """Intermediate magnitudes exceed the representable range."""


class ChildCountMismatch(SturmSpecError):
    """Located child bands disagree with the combinatorial count."""


class BoundViolation(SturmSpecError):
    """A certified length bound failed beyond tolerance."""


class InadmissibleWord(SturmSpecError):
    """Word violates the letter admissibility relation."""


class OrderTooSmall(SturmSpecError):
    """Requested order lies in the non-stationary prefix regime."""


class CapExceeded(SturmSpecError):
    """A configured size cap (matrix dimension, enumeration) was exceeded."""


class DepthOverflow(CapExceeded):
    """Word enumeration at the requested depth exceeds the configured cap."""


class DepthMismatch(SturmSpecError):
    """Tables supplied at inconsistent depths."""


class MissingBand(SturmSpecError):
    """Band tree lacks a branch required by the requested computation."""


class NoRootInUnitInterval(SturmSpecError):
    """The Moran/Bowen equation has no root in [0, 1]."""


class GridTooCoarse(SturmSpecError):
    """Adjacent slopes on the tau grid differ too much for a reliable transform."""
