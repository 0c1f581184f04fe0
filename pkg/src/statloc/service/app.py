"""FastAPI application wrapping the simulator and campaign layer.

Domain errors (anything in the ValueError family: spec, capacity, move and
degeneracy errors) map to HTTP 400 with a machine-readable body
``{"error": <class name>, "message": <text>}``.  Model-construction warnings
(low survival probability) are captured and returned in the response rather
than printed server-side.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable, TypeVar

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

import statloc
from statloc import campaigns
from statloc.bell.experiment import (
    enumerate_trajectories,
    outcome_distribution,
    planar_setting,
    survival_probability,
    with_settings,
)
from statloc.factors import DEFAULT_ENUMERATION_CAP
from statloc.ising import (
    IsingModel,
    config_to_string,
    exact_distribution,
    sample_ising,
)
from statloc.service import schemas

_T = TypeVar("_T")


def _with_warnings(fn: Callable[[], _T]) -> tuple[_T, list[str]]:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = fn()
    return result, [str(w.message) for w in caught]


def _settings_vectors(pairs_deg) -> list[tuple]:
    return [
        (planar_setting(math.radians(a)), planar_setting(math.radians(b)))
        for a, b in pairs_deg
    ]


def create_app() -> FastAPI:
    app = FastAPI(title="statloc", version=statloc.__version__)

    @app.exception_handler(ValueError)
    async def _domain_error(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=statloc.__version__)

    @app.post("/ising/exact", response_model=schemas.IsingExactResponse)
    def ising_exact(req: schemas.IsingExactRequest) -> schemas.IsingExactResponse:
        model = IsingModel(
            width=req.width,
            height=req.height,
            coupling=req.coupling,
            boundary=req.boundary,
        )
        dist = exact_distribution(model)
        entries = sorted(
            (
                schemas.DistributionEntry(
                    config=config_to_string(config), probability=prob
                )
                for config, prob in dist.items()
            ),
            key=lambda entry: entry.config,
        )
        return schemas.IsingExactResponse(
            width=req.width,
            height=req.height,
            coupling=req.coupling,
            boundary=req.boundary,
            entries=entries,
        )

    @app.post("/ising/sample", response_model=schemas.IsingSampleResponse)
    def ising_sample(req: schemas.IsingSampleRequest) -> schemas.IsingSampleResponse:
        model = IsingModel(
            width=req.width,
            height=req.height,
            coupling=req.coupling,
            boundary=req.boundary,
        )
        summary = sample_ising(
            model, sweeps=req.sweeps, seed=req.seed, stream=req.stream
        )
        stats = [
            schemas.PairStatModel(
                site_i=stat.site_i,
                site_j=stat.site_j,
                sampled=stat.sampled,
                stderr=None if math.isnan(stat.stderr) else stat.stderr,
                exact=stat.exact,
            )
            for stat in summary.correlations
        ]
        return schemas.IsingSampleResponse(
            width=req.width,
            height=req.height,
            coupling=req.coupling,
            boundary=req.boundary,
            sweeps=summary.sweeps,
            seed=summary.seed,
            stream=summary.stream,
            acceptance_rate=summary.acceptance_rate,
            mean_magnetization=summary.mean_magnetization,
            mean_abs_magnetization=summary.mean_abs_magnetization,
            magnetization_histogram=dict(
                sorted(summary.magnetization_histogram.items())
            ),
            correlations=stats,
            tv_distance=summary.tv_distance,
            final_config=config_to_string(summary.final_config),
        )

    @app.post("/bell/distribution", response_model=schemas.DistributionResponse)
    def bell_distribution(
        req: schemas.DistributionRequest,
    ) -> schemas.DistributionResponse:
        cap = req.cap or DEFAULT_ENUMERATION_CAP

        def run():
            spec = req.spec.to_spec()
            dist = outcome_distribution(spec, cap=cap)
            count = len(enumerate_trajectories(spec, cap=cap))
            return spec, dist, count

        (spec, dist, count), caught = _with_warnings(run)
        return schemas.DistributionResponse(
            probabilities=dist.as_dict(),
            correlation=dist.correlation,
            right_marginal_plus=dist.right_marginal(+1),
            left_marginal_plus=dist.left_marginal(+1),
            survival_probability=survival_probability(
                spec.epsilon, spec.survival_links
            ),
            n_configurations=count,
            warnings=caught,
        )

    @app.post("/bell/chsh-scan", response_model=schemas.ReportModel)
    def bell_chsh_scan(req: schemas.ChshScanRequest) -> schemas.ReportModel:
        cap = req.cap or DEFAULT_ENUMERATION_CAP
        report, caught = _with_warnings(
            lambda: campaigns.run_chsh_scan(
                req.template.to_spec(),
                angles_deg=req.angles_deg,
                seed=req.seed,
                cap=cap,
                workers=req.workers,
            )
        )
        return schemas.ReportModel.from_report(report, caught)

    @app.post("/bell/locality", response_model=schemas.ReportModel)
    def bell_locality(req: schemas.LocalityRequest) -> schemas.ReportModel:
        report, caught = _with_warnings(
            lambda: campaigns.run_locality_audit(
                target=req.target, trials=req.trials, seed=req.seed
            )
        )
        return schemas.ReportModel.from_report(report, caught)

    @app.post("/bell/free-will", response_model=schemas.ReportModel)
    def bell_free_will(req: schemas.FreeWillRequest) -> schemas.ReportModel:
        cap = req.cap or DEFAULT_ENUMERATION_CAP

        def run():
            template = req.template.to_spec()
            specs = [
                with_settings(template, a, b)
                for a, b in _settings_vectors(req.settings_deg)
            ]
            return campaigns.run_free_will_suite(
                specs, seed=req.seed, cap=cap, workers=req.workers
            )

        report, caught = _with_warnings(run)
        return schemas.ReportModel.from_report(report, caught)

    @app.post("/bell/no-signalling", response_model=schemas.ReportModel)
    def bell_no_signalling(req: schemas.NoSignallingRequest) -> schemas.ReportModel:
        cap = req.cap or DEFAULT_ENUMERATION_CAP

        def run():
            settings = (
                None
                if req.settings_deg is None
                else _settings_vectors(req.settings_deg)
            )
            return campaigns.run_no_signalling_suite(
                req.template.to_spec(),
                settings=settings,
                seed=req.seed,
                cap=cap,
                workers=req.workers,
            )

        report, caught = _with_warnings(run)
        return schemas.ReportModel.from_report(report, caught)

    @app.post("/bell/signalling-demo", response_model=schemas.ReportModel)
    def bell_signalling_demo(
        req: schemas.SignallingDemoRequest,
    ) -> schemas.ReportModel:
        cap = req.cap or DEFAULT_ENUMERATION_CAP

        def run():
            settings = (
                None
                if req.settings_deg is None
                else _settings_vectors(req.settings_deg)
            )
            return campaigns.run_signalling_demo(
                req.template.to_spec(),
                strength=req.strength,
                settings=settings,
                seed=req.seed,
                cap=cap,
                workers=req.workers,
            )

        report, caught = _with_warnings(run)
        return schemas.ReportModel.from_report(report, caught)

    return app


app = create_app()
