"""Typed check records and campaign reports with stable serialization.

Every verification campaign produces a :class:`CampaignReport` holding one
:class:`CheckRecord` per individual comparison.  Serialization is
deterministic: floats are written in shortest round-trip form, JSON keys are
sorted, and CSV columns are frozen, so a report regenerated from the same
inputs and seed is byte-identical.  Wall-clock runtime is kept on the report
object for interactive display but never serialized.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

Scalar = float | int | str | None

# Frozen CSV column order; changing it breaks golden files downstream.
CSV_COLUMNS = (
    "campaign",
    "check_id",
    "description",
    "expected",
    "observed",
    "tolerance",
    "passed",
)


def format_scalar(value: Scalar | bool) -> str:
    """Stable text form: repr for floats, true/false for bools, '' for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class CheckRecord:
    """One verified comparison inside a campaign.

    ``tolerance`` is None for purely informational records; those must carry
    ``passed=True`` so they never flip a campaign red.
    """

    check_id: str
    description: str
    expected: Scalar
    observed: Scalar
    tolerance: float | None
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "description": self.description,
            "expected": self.expected,
            "observed": self.observed,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class CampaignReport:
    """Outcome of one campaign run, reproducible from (campaign, seed)."""

    campaign: str
    seed: int | None
    checks: tuple[CheckRecord, ...]
    metadata: dict = field(default_factory=dict)
    runtime_seconds: float | None = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def n_failed(self) -> int:
        return sum(1 for check in self.checks if not check.passed)

    def to_json_dict(self) -> dict:
        # Runtime varies run to run and is deliberately omitted.
        return {
            "campaign": self.campaign,
            "seed": self.seed,
            "passed": self.passed,
            "metadata": self.metadata,
            "checks": [check.to_json_dict() for check in self.checks],
        }


def report_from_json_dict(data: dict) -> CampaignReport:
    """Rebuild a report from its serialized form (runtime is not restored)."""
    checks = tuple(
        CheckRecord(
            check_id=entry["check_id"],
            description=entry["description"],
            expected=entry["expected"],
            observed=entry["observed"],
            tolerance=entry["tolerance"],
            passed=entry["passed"],
        )
        for entry in data["checks"]
    )
    return CampaignReport(
        campaign=data["campaign"],
        seed=data["seed"],
        checks=checks,
        metadata=data.get("metadata", {}),
    )


def report_to_json(report: CampaignReport) -> str:
    return json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"


def report_to_csv(report: CampaignReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for check in report.checks:
        writer.writerow(
            (
                report.campaign,
                check.check_id,
                check.description,
                format_scalar(check.expected),
                format_scalar(check.observed),
                format_scalar(check.tolerance),
                format_scalar(check.passed),
            )
        )
    return buffer.getvalue()


def summary_table(report: CampaignReport) -> str:
    """Human-readable fixed-width summary, one line per check."""
    lines = [
        f"campaign: {report.campaign}",
        f"seed: {report.seed}",
        f"checks: {len(report.checks)}  failed: {report.n_failed}",
    ]
    if report.runtime_seconds is not None:
        lines.append(f"runtime: {report.runtime_seconds:.3f}s")
    width = max((len(check.check_id) for check in report.checks), default=0)
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        tol = "" if check.tolerance is None else f"  tol={format_scalar(check.tolerance)}"
        lines.append(
            f"[{status}] {check.check_id.ljust(width)}  "
            f"expected={format_scalar(check.expected)}  "
            f"observed={format_scalar(check.observed)}{tol}"
        )
    lines.append(f"result: {'PASS' if report.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"
