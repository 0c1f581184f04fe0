"""Exception and warning types shared across the package."""

from __future__ import annotations


class CapacityError(ValueError):
    """Configuration space exceeds the exact-enumeration cap; use sampling."""


class DegenerateModelError(ValueError):
    """Every configuration has weight zero; the distribution is undefined."""


class ZeroWeightError(ValueError):
    """Denominator configuration has weight zero in a probability ratio."""


class MoveError(ValueError):
    """A move set proposed a configuration outside the model's domain."""


class SpecError(ValueError):
    """An experiment specification is inconsistent or violates causality."""


class LowSurvivalWarning(UserWarning):
    """Switch rate is large enough that straight-line propagation to the
    detectors is no longer near-certain."""
