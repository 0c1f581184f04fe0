"""Command-line client.

Every data-producing subcommand talks to the HTTP service: in-process by
default (no server needed), or to a running instance via ``--url``.  Results
are written as JSON or CSV with frozen field orders, so a rerun with the same
inputs and seed produces a byte-identical file.  Human-readable summaries and
warnings go to stderr; payloads go to ``--out`` or stdout.

Exit codes: 0 success / all checks passed, 1 at least one campaign check
failed, 2 usage or spec error.
"""

from __future__ import annotations

import argparse
import csv as csv_module
import io
import json
import os
import sys
import warnings

import httpx

from statloc.reports import (
    format_scalar,
    report_from_json_dict,
    report_to_csv,
    report_to_json,
    summary_table,
)
from statloc.rng import DEFAULT_SEED

OUT_DIR_ENV = "STATLOC_OUT_DIR"

EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_USAGE = 2

# Frozen row orders for the flat key,value CSV payloads.
DISTRIBUTION_FIELDS = (
    "p_++",
    "p_+-",
    "p_-+",
    "p_--",
    "correlation",
    "right_marginal_plus",
    "left_marginal_plus",
    "survival_probability",
    "n_configurations",
)
SAMPLE_SCALAR_FIELDS = (
    "width",
    "height",
    "coupling",
    "boundary",
    "sweeps",
    "seed",
    "stream",
    "acceptance_rate",
    "mean_magnetization",
    "mean_abs_magnetization",
    "tv_distance",
    "final_config",
)


class CliError(Exception):
    """Carries a machine-readable error record and the exit status."""

    def __init__(self, error: str, message: str, status: int = EXIT_USAGE):
        super().__init__(message)
        self.record = {"error": error, "message": message}
        self.status = status


def make_client(url: str | None) -> httpx.Client:
    if url:
        return httpx.Client(base_url=url, timeout=600.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from statloc.service import app

    return TestClient(app, base_url="http://statloc.internal")


def call_service(client: httpx.Client, path: str, body: dict) -> dict:
    try:
        response = client.post(path, json=body)
    except httpx.HTTPError as exc:
        raise CliError("ConnectionError", f"service request failed: {exc}")
    if response.status_code == 200:
        return response.json()
    try:
        detail = response.json()
    except json.JSONDecodeError:
        detail = {"error": "HTTPError", "message": response.text}
    if "error" not in detail:  # validation errors arrive as {"detail": ...}
        detail = {
            "error": "ValidationError",
            "message": json.dumps(detail.get("detail", detail)),
        }
    raise CliError(detail["error"], detail["message"])


# ---------------------------------------------------------------------------
# output plumbing


def resolve_out(path: str | None) -> str | None:
    """Relative output paths land in $STATLOC_OUT_DIR when it is set."""
    if path is None or os.path.isabs(path):
        return path
    base = os.environ.get(OUT_DIR_ENV)
    return os.path.join(base, path) if base else path


def emit(text: str, out: str | None) -> None:
    target = resolve_out(out)
    if target is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(target)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(target, "w", encoding="utf-8") as fh:
        fh.write(text)
    sys.stderr.write(f"wrote {target}\n")


def json_payload(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def rows_to_csv(header: tuple[str, ...], rows) -> str:
    buffer = io.StringIO()
    writer = csv_module.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_scalar(value) for value in row])
    return buffer.getvalue()


def drain_warnings(payload: dict) -> dict:
    for message in payload.pop("warnings", []):
        sys.stderr.write(f"warning: {message}\n")
    return payload


# ---------------------------------------------------------------------------
# payload renderers


def render_report(payload: dict, fmt: str) -> tuple[str, int]:
    report = report_from_json_dict(payload)
    sys.stderr.write(summary_table(report))
    text = report_to_json(report) if fmt == "json" else report_to_csv(report)
    return text, EXIT_PASS if report.passed else EXIT_CHECK_FAILURE


def render_ising_exact(payload: dict, fmt: str) -> tuple[str, int]:
    if fmt == "json":
        return json_payload(payload), EXIT_PASS
    rows = [(e["config"], e["probability"]) for e in payload["entries"]]
    return rows_to_csv(("config", "probability"), rows), EXIT_PASS


def render_ising_sample(payload: dict, fmt: str) -> tuple[str, int]:
    if fmt == "json":
        return json_payload(payload), EXIT_PASS
    rows = [(name, payload[name]) for name in SAMPLE_SCALAR_FIELDS]
    for magnetization in sorted(
        payload["magnetization_histogram"], key=lambda k: int(k)
    ):
        rows.append(
            (
                f"histogram_{magnetization}",
                payload["magnetization_histogram"][magnetization],
            )
        )
    for stat in payload["correlations"]:
        prefix = f"correlation_{stat['site_i']}_{stat['site_j']}"
        rows.append((f"{prefix}_sampled", stat["sampled"]))
        rows.append((f"{prefix}_stderr", stat["stderr"]))
        rows.append((f"{prefix}_exact", stat["exact"]))
    return rows_to_csv(("field", "value"), rows), EXIT_PASS


def render_distribution(payload: dict, fmt: str) -> tuple[str, int]:
    if fmt == "json":
        return json_payload(payload), EXIT_PASS
    values = {
        "p_++": payload["probabilities"]["++"],
        "p_+-": payload["probabilities"]["+-"],
        "p_-+": payload["probabilities"]["-+"],
        "p_--": payload["probabilities"]["--"],
        "correlation": payload["correlation"],
        "right_marginal_plus": payload["right_marginal_plus"],
        "left_marginal_plus": payload["left_marginal_plus"],
        "survival_probability": payload["survival_probability"],
        "n_configurations": payload["n_configurations"],
    }
    rows = [(name, values[name]) for name in DISTRIBUTION_FIELDS]
    return rows_to_csv(("field", "value"), rows), EXIT_PASS


# ---------------------------------------------------------------------------
# request assembly


def parse_settings(text: str) -> list[tuple[float, float]]:
    """'0:45,90:135' -> [(0.0, 45.0), (90.0, 135.0)] (degrees)."""
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(
                f"bad settings pair {chunk!r}; expected A_DEG:B_DEG"
            )
        try:
            pairs.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc))
    return pairs


def parse_angles(text: str) -> list[float]:
    try:
        return [float(chunk) for chunk in text.split(",") if chunk.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def bell_spec_body(args: argparse.Namespace) -> dict:
    """Request body for the template/spec, from a file or from flags."""
    if getattr(args, "spec", None):
        try:
            with open(args.spec, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise CliError("SpecError", f"cannot read spec file: {exc}")
        except json.JSONDecodeError as exc:
            raise CliError("SpecError", f"{args.spec} is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise CliError("SpecError", "experiment spec must be a JSON object")
        return data
    body: dict = {
        "extent": args.extent,
        "detector_right": args.detector,
        "detector_left": -args.detector,
        "epsilon": args.epsilon,
    }
    if getattr(args, "theta", None) is not None:
        body["a_deg"] = 0.0
        body["b_deg"] = args.theta
    if getattr(args, "weight", "singlet") == "signalling":
        body["rule"] = {"name": "signalling", "strength": args.strength}
    return body


def common_request_fields(args: argparse.Namespace) -> dict:
    fields: dict = {}
    if getattr(args, "seed", None) is not None:
        fields["seed"] = args.seed
    if getattr(args, "cap", None) is not None:
        fields["cap"] = args.cap
    if getattr(args, "workers", None) is not None:
        fields["workers"] = args.workers
    return fields


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from statloc.service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_PASS


def cmd_ising_exact(args: argparse.Namespace, client: httpx.Client) -> int:
    payload = call_service(
        client,
        "/ising/exact",
        {
            "width": args.width,
            "height": args.height,
            "coupling": args.coupling,
            "boundary": args.boundary,
        },
    )
    text, status = render_ising_exact(drain_warnings(payload), args.format)
    emit(text, args.out)
    return status


def cmd_ising_sample(args: argparse.Namespace, client: httpx.Client) -> int:
    payload = call_service(
        client,
        "/ising/sample",
        {
            "width": args.width,
            "height": args.height,
            "coupling": args.coupling,
            "boundary": args.boundary,
            "sweeps": args.sweeps,
            "seed": args.seed,
            "stream": args.stream,
        },
    )
    text, status = render_ising_sample(drain_warnings(payload), args.format)
    emit(text, args.out)
    return status


def cmd_bell_distribution(args: argparse.Namespace, client: httpx.Client) -> int:
    body: dict = {"spec": bell_spec_body(args)}
    if args.cap is not None:
        body["cap"] = args.cap
    payload = call_service(client, "/bell/distribution", body)
    text, status = render_distribution(drain_warnings(payload), args.format)
    emit(text, args.out)
    return status


def _campaign_command(args: argparse.Namespace, client: httpx.Client, path: str, extra: dict) -> int:
    body = {"template": bell_spec_body(args), **common_request_fields(args), **extra}
    payload = call_service(client, path, body)
    text, status = render_report(drain_warnings(payload), args.format)
    emit(text, args.out)
    return status


def cmd_bell_chsh_scan(args: argparse.Namespace, client: httpx.Client) -> int:
    extra: dict = {}
    if args.angles is not None:
        extra["angles_deg"] = args.angles
    return _campaign_command(args, client, "/bell/chsh-scan", extra)


def cmd_bell_locality(args: argparse.Namespace, client: httpx.Client) -> int:
    body = {"target": args.target, "trials": args.trials, "seed": args.seed}
    payload = call_service(client, "/bell/locality", body)
    text, status = render_report(drain_warnings(payload), args.format)
    emit(text, args.out)
    return status


def cmd_bell_free_will(args: argparse.Namespace, client: httpx.Client) -> int:
    extra: dict = {}
    if args.settings is not None:
        extra["settings_deg"] = args.settings
    return _campaign_command(args, client, "/bell/free-will", extra)


def cmd_bell_no_signalling(args: argparse.Namespace, client: httpx.Client) -> int:
    extra: dict = {}
    if args.settings is not None:
        extra["settings_deg"] = args.settings
    return _campaign_command(args, client, "/bell/no-signalling", extra)


def cmd_bell_signalling_demo(args: argparse.Namespace, client: httpx.Client) -> int:
    extra: dict = {"strength": args.strength}
    if args.settings is not None:
        extra["settings_deg"] = args.settings
    return _campaign_command(args, client, "/bell/signalling-demo", extra)


# ---------------------------------------------------------------------------
# parser


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", choices=("json", "csv"), default="json", help="output format"
    )
    parser.add_argument(
        "--out",
        help=f"output file; relative paths resolve under ${OUT_DIR_ENV} when set",
    )
    parser.add_argument(
        "--url", help="base URL of a running service; default runs in-process"
    )


def _add_bell_template_flags(
    parser: argparse.ArgumentParser, *, theta: bool = False, weight: bool = False
) -> None:
    parser.add_argument("--spec", help="experiment spec file (JSON)")
    parser.add_argument("--extent", type=int, default=4, help="lattice extent")
    parser.add_argument(
        "--detector",
        type=int,
        default=1,
        help="detector line offset d; lines sit at +d and -d",
    )
    parser.add_argument(
        "--epsilon", type=float, default=0.003, help="switch probability weight"
    )
    if theta:
        parser.add_argument(
            "--theta",
            type=float,
            default=None,
            help="angle between the settings, degrees",
        )
    if weight:
        parser.add_argument(
            "--weight",
            choices=("singlet", "signalling"),
            default="singlet",
            help="annihilation weight family",
        )
        parser.add_argument(
            "--strength",
            type=float,
            default=0.5,
            help="signalling strength (used with --weight signalling)",
        )
    parser.add_argument("--cap", type=int, default=None, help="enumeration cap")


def _add_campaign_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument(
        "--workers", type=int, default=1, help="parallel workers across settings"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statloc",
        description=(
            "Statistically local lattice models: exact Ising tools and a "
            "photon-trajectory simulator reproducing singlet correlations."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    ising = commands.add_parser("ising", help="2D Ising lattice operations")
    ising_sub = ising.add_subparsers(dest="subcommand", required=True)

    exact = ising_sub.add_parser("exact", help="exact Boltzmann distribution")
    exact.add_argument("--width", type=int, default=2)
    exact.add_argument("--height", type=int, default=2)
    exact.add_argument("--coupling", type=float, default=0.5)
    exact.add_argument("--boundary", choices=("open", "periodic"), default="open")
    _add_output_flags(exact)

    sample = ising_sub.add_parser("sample", help="Metropolis sampling summary")
    sample.add_argument("--width", type=int, default=3)
    sample.add_argument("--height", type=int, default=3)
    sample.add_argument("--coupling", type=float, default=0.3)
    sample.add_argument("--boundary", choices=("open", "periodic"), default="open")
    sample.add_argument("--sweeps", type=int, default=1000)
    sample.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sample.add_argument("--stream", type=int, default=0)
    _add_output_flags(sample)

    bell = commands.add_parser("bell", help="photon-trajectory experiments")
    bell_sub = bell.add_subparsers(dest="subcommand", required=True)

    dist = bell_sub.add_parser("distribution", help="exact outcome distribution")
    _add_bell_template_flags(dist, theta=True, weight=True)
    _add_output_flags(dist)

    chsh = bell_sub.add_parser("chsh-scan", help="correlation curve and CHSH maximum")
    _add_bell_template_flags(chsh)
    chsh.add_argument(
        "--angles", type=parse_angles, default=None, help="grid, e.g. 0,45,90,135"
    )
    _add_campaign_flags(chsh)
    _add_output_flags(chsh)

    locality = bell_sub.add_parser("locality", help="statistical-locality audit")
    locality.add_argument("--target", choices=("ising", "bell"), default="ising")
    locality.add_argument("--trials", type=int, default=100)
    locality.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_output_flags(locality)

    free_will = bell_sub.add_parser(
        "free-will", help="settings independence of pre-measurement records"
    )
    _add_bell_template_flags(free_will)
    free_will.add_argument(
        "--settings",
        type=parse_settings,
        default=None,
        help="settings pairs in degrees, e.g. 0:45,0:135,90:45,90:135",
    )
    _add_campaign_flags(free_will)
    _add_output_flags(free_will)

    no_sig = bell_sub.add_parser(
        "no-signalling", help="single-wing marginals across a settings grid"
    )
    _add_bell_template_flags(no_sig, weight=True)
    no_sig.add_argument("--settings", type=parse_settings, default=None)
    _add_campaign_flags(no_sig)
    _add_output_flags(no_sig)

    demo = bell_sub.add_parser(
        "signalling-demo", help="consistent but signalling annihilation weight"
    )
    _add_bell_template_flags(demo)
    demo.add_argument("--strength", type=float, default=0.5)
    demo.add_argument("--settings", type=parse_settings, default=None)
    _add_campaign_flags(demo)
    _add_output_flags(demo)

    return parser


_HANDLERS = {
    ("ising", "exact"): cmd_ising_exact,
    ("ising", "sample"): cmd_ising_sample,
    ("bell", "distribution"): cmd_bell_distribution,
    ("bell", "chsh-scan"): cmd_bell_chsh_scan,
    ("bell", "locality"): cmd_bell_locality,
    ("bell", "free-will"): cmd_bell_free_will,
    ("bell", "no-signalling"): cmd_bell_no_signalling,
    ("bell", "signalling-demo"): cmd_bell_signalling_demo,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    handler = _HANDLERS[(args.command, args.subcommand)]
    try:
        client = make_client(args.url)
        try:
            return handler(args, client)
        finally:
            client.close()
    except CliError as exc:
        sys.stderr.write(json.dumps(exc.record, sort_keys=True) + "\n")
        return exc.status


if __name__ == "__main__":
    sys.exit(main())
