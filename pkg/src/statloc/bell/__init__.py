"""Photon-trajectory Bell experiments on a lightlike diamond lattice."""

from statloc.bell.experiment import (
    ExperimentSpec,
    JointDistribution,
    PreMeasurementRecord,
    SignallingAnnihilation,
    SingletAnnihilation,
    TrajectoryConfig,
    chsh,
    correlation,
    enumerate_trajectories,
    outcome_distribution,
    pre_measurement_distribution,
    pre_measurement_view,
    survival_probability,
    trajectory_weight,
)
from statloc.bell.lattice import DiamondLattice

__all__ = [
    "DiamondLattice",
    "ExperimentSpec",
    "JointDistribution",
    "PreMeasurementRecord",
    "SignallingAnnihilation",
    "SingletAnnihilation",
    "TrajectoryConfig",
    "chsh",
    "correlation",
    "enumerate_trajectories",
    "outcome_distribution",
    "pre_measurement_distribution",
    "pre_measurement_view",
    "survival_probability",
    "trajectory_weight",
]
