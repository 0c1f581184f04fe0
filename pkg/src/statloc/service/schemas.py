"""Request and response models for the HTTP service.

Angles travel as degrees in request bodies (mirroring the CLI); full unit
vectors may be given instead via ``a_meas``/``b_meas``.  Responses mirror the
JSON forms used by the report and golden-file writers so the CLI can dump
them byte-exactly.  All models reject unknown fields: a misplaced or
misspelled key must fail loudly rather than have a default quietly change
the numbers.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from statloc.bell.experiment import (
    AnnihilationWeight,
    ExperimentSpec,
    SignallingAnnihilation,
    SingletAnnihilation,
    planar_setting,
)
from statloc.reports import CampaignReport
from statloc.rng import DEFAULT_SEED

SettingsPairDeg = tuple[float, float]

# The four planar angles (degrees) of the optimal CHSH arrangement, used as
# the default settings list for the free-will suite.
CHSH_SETTINGS_DEG: tuple[SettingsPairDeg, ...] = (
    (0.0, 45.0),
    (0.0, 135.0),
    (90.0, 45.0),
    (90.0, 135.0),
)


class StrictModel(BaseModel):
    """Wire-model base: unknown fields are an error, never a silent default."""

    model_config = ConfigDict(extra="forbid")


class RuleModel(StrictModel):
    name: Literal["singlet", "signalling"] = "singlet"
    strength: float | None = None

    @model_validator(mode="after")
    def _strength_only_for_signalling(self) -> "RuleModel":
        if self.name == "signalling" and self.strength is None:
            raise ValueError("signalling rule requires a strength")
        if self.name == "singlet" and self.strength is not None:
            raise ValueError("singlet rule takes no strength")
        return self

    def to_rule(self) -> AnnihilationWeight:
        if self.name == "signalling":
            return SignallingAnnihilation(strength=self.strength)
        return SingletAnnihilation()


class BellSpecModel(StrictModel):
    """Wire form of an experiment spec; angles in degrees, vectors optional."""

    extent: int = 4
    source: tuple[int, int] = (0, 0)
    detector_right: int = 1
    detector_left: int = -1
    a_deg: float = 0.0
    b_deg: float = 0.0
    a_meas: tuple[float, float, float] | None = None
    b_meas: tuple[float, float, float] | None = None
    epsilon: float = 0.003
    rule: RuleModel = Field(default_factory=RuleModel)
    pair_label: int = 0

    def to_spec(self) -> ExperimentSpec:
        a = (
            self.a_meas
            if self.a_meas is not None
            else planar_setting(math.radians(self.a_deg))
        )
        b = (
            self.b_meas
            if self.b_meas is not None
            else planar_setting(math.radians(self.b_deg))
        )
        return ExperimentSpec(
            extent=self.extent,
            detector_right=self.detector_right,
            detector_left=self.detector_left,
            a_meas=a,
            b_meas=b,
            epsilon=self.epsilon,
            source=self.source,
            rule=self.rule.to_rule(),
            pair_label=self.pair_label,
        )


class CheckModel(StrictModel):
    check_id: str
    description: str
    expected: float | int | str | None
    observed: float | int | str | None
    tolerance: float | None
    passed: bool


class ReportModel(StrictModel):
    campaign: str
    seed: int | None
    passed: bool
    metadata: dict
    checks: list[CheckModel]
    warnings: list[str] = []

    @classmethod
    def from_report(
        cls, report: CampaignReport, warnings: list[str] | None = None
    ) -> "ReportModel":
        return cls(warnings=warnings or [], **report.to_json_dict())


class DistributionRequest(StrictModel):
    spec: BellSpecModel = Field(default_factory=BellSpecModel)
    cap: int | None = None


class DistributionResponse(StrictModel):
    probabilities: dict[str, float]  # keys "++", "+-", "-+", "--"
    correlation: float
    right_marginal_plus: float
    left_marginal_plus: float
    survival_probability: float
    n_configurations: int
    warnings: list[str] = []


class ChshScanRequest(StrictModel):
    template: BellSpecModel = Field(default_factory=BellSpecModel)
    angles_deg: list[float] | None = None
    seed: int = DEFAULT_SEED
    cap: int | None = None
    workers: int = 1


class LocalityRequest(StrictModel):
    target: Literal["ising", "bell"] = "ising"
    trials: int = 100
    seed: int = DEFAULT_SEED


class FreeWillRequest(StrictModel):
    template: BellSpecModel = Field(default_factory=BellSpecModel)
    settings_deg: list[SettingsPairDeg] = Field(
        default_factory=lambda: list(CHSH_SETTINGS_DEG)
    )
    seed: int = DEFAULT_SEED
    cap: int | None = None
    workers: int = 1


class NoSignallingRequest(StrictModel):
    template: BellSpecModel = Field(default_factory=BellSpecModel)
    settings_deg: list[SettingsPairDeg] | None = None
    seed: int = DEFAULT_SEED
    cap: int | None = None
    workers: int = 1


class SignallingDemoRequest(StrictModel):
    template: BellSpecModel = Field(default_factory=BellSpecModel)
    strength: float = 0.5
    settings_deg: list[SettingsPairDeg] | None = None
    seed: int = DEFAULT_SEED
    cap: int | None = None
    workers: int = 1


class IsingExactRequest(StrictModel):
    width: int = 2
    height: int = 2
    coupling: float = 0.5
    boundary: Literal["open", "periodic"] = "open"


class DistributionEntry(StrictModel):
    config: str
    probability: float


class IsingExactResponse(StrictModel):
    width: int
    height: int
    coupling: float
    boundary: str
    entries: list[DistributionEntry]  # sorted lexicographically by config


class IsingSampleRequest(StrictModel):
    width: int = 3
    height: int = 3
    coupling: float = 0.3
    boundary: Literal["open", "periodic"] = "open"
    sweeps: int = 1000
    seed: int = DEFAULT_SEED
    stream: int = 0


class PairStatModel(StrictModel):
    site_i: int
    site_j: int
    sampled: float
    stderr: float | None  # None when too few sweeps for batch means
    exact: float | None


class IsingSampleResponse(StrictModel):
    width: int
    height: int
    coupling: float
    boundary: str
    sweeps: int
    seed: int
    stream: int
    acceptance_rate: float
    mean_magnetization: float
    mean_abs_magnetization: float
    magnetization_histogram: dict[int, int]
    correlations: list[PairStatModel]
    tv_distance: float | None
    final_config: str


class HealthResponse(StrictModel):
    status: str
    version: str
