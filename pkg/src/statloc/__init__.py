"""Statistically local lattice models and their verification campaigns.

A model is *statistically local* when the probability of a global
configuration is a normalized product of local factor weights: the ratio of
the probabilities of two configurations that differ only on a region can then
be computed from the factors touching that region alone.  The package ships
two such models -- the square-lattice Ising model and a lightlike-lattice
photon-trajectory model that reproduces singlet correlations -- plus exact
enumeration, a Metropolis sampler, and campaign suites that audit locality,
no-signalling, measurement independence, and CHSH values.
"""

__version__ = "0.1.0"

from statloc.errors import (
    CapacityError,
    DegenerateModelError,
    LowSurvivalWarning,
    MoveError,
    SpecError,
    ZeroWeightError,
)
from statloc.factors import Factor, FactorModel
from statloc.reports import CampaignReport, CheckRecord

__all__ = [
    "CampaignReport",
    "CapacityError",
    "CheckRecord",
    "DegenerateModelError",
    "Factor",
    "FactorModel",
    "LowSurvivalWarning",
    "MoveError",
    "SpecError",
    "ZeroWeightError",
    "__version__",
]
