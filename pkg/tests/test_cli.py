"""CLI behavior: golden payloads, exit codes, output routing."""

import json
import pathlib

import pytest

from statloc.cli import main, parse_angles, parse_settings

GOLDEN = pathlib.Path(__file__).parent / "golden"


def run_cli(capsys, *argv):
    status = main(list(argv))
    captured = capsys.readouterr()
    return status, captured.out, captured.err


# ---------------------------------------------------------------------------
# golden payloads


def test_ising_exact_csv_golden(capsys):
    status, out, _ = run_cli(capsys, "ising", "exact", "--format", "csv")
    assert status == 0
    assert out == (GOLDEN / "cli_ising_exact_2x2.csv").read_text()


def test_bell_distribution_csv_golden(capsys):
    status, out, err = run_cli(
        capsys, "bell", "distribution", "--theta", "60", "--format", "csv"
    )
    assert status == 0
    assert out == (GOLDEN / "cli_bell_distribution_theta60.csv").read_text()
    assert "warning" not in err


def test_bell_distribution_json(capsys):
    status, out, _ = run_cli(capsys, "bell", "distribution", "--theta", "60")
    assert status == 0
    payload = json.loads(out)
    assert payload["probabilities"]["++"] == pytest.approx(0.125, abs=1e-12)
    assert payload["n_configurations"] == 80
    assert "warnings" not in payload  # drained to stderr, not serialized
    assert out.endswith("\n")


def test_ising_sample_csv_shape(capsys):
    argv = ("ising", "sample", "--sweeps", "40", "--seed", "3", "--format", "csv")
    status, out, _ = run_cli(capsys, *argv)
    assert status == 0
    lines = out.splitlines()
    assert lines[0] == "field,value"
    fields = [line.split(",")[0] for line in lines[1:]]
    assert fields[:3] == ["width", "height", "coupling"]
    assert any(f.startswith("histogram_") for f in fields)
    assert "correlation_0_1_sampled" in fields
    # seeded rerun is byte-identical
    status2, out2, _ = run_cli(capsys, *argv)
    assert (status2, out2) == (0, out)


# ---------------------------------------------------------------------------
# warnings and campaign summaries on stderr


def test_low_survival_warning_goes_to_stderr(capsys):
    status, out, err = run_cli(
        capsys,
        "bell", "distribution",
        "--extent", "2", "--epsilon", "0.25", "--theta", "60",
        "--format", "csv",
    )
    assert status == 0
    assert "warning: survival probability" in err
    assert "p_++,0.12499999999999997" in out
    assert "survival_probability,0.75" in out


def test_campaign_summary_on_stderr_payload_on_stdout(capsys):
    status, out, err = run_cli(
        capsys,
        "bell", "chsh-scan", "--angles", "0,45,90,135", "--seed", "5",
    )
    assert status == 0
    assert "result: PASS" in err
    assert "[PASS] max-abs-s" in err
    payload = json.loads(out)
    assert payload["campaign"] == "chsh-scan"
    assert payload["seed"] == 5


def test_free_will_with_explicit_settings(capsys):
    status, _, err = run_cli(
        capsys, "bell", "free-will", "--settings", "0:45,0:135,90:45"
    )
    assert status == 0
    assert "checks: 3" in err  # three pairwise comparisons


# ---------------------------------------------------------------------------
# exit codes


def test_capacity_error_exits_2(capsys):
    status, out, err = run_cli(capsys, "ising", "exact", "--width", "6", "--height", "6")
    assert status == 2
    assert out == ""
    record = json.loads(err)
    assert record["error"] == "CapacityError"


def test_failed_checks_exit_1(capsys):
    status, out, err = run_cli(
        capsys,
        "bell", "no-signalling",
        "--weight", "signalling", "--strength", "0.6",
        "--settings", "0:0,0:45",
    )
    assert status == 1
    assert "result: FAIL" in err
    payload = json.loads(out)
    assert payload["passed"] is False


def test_domain_error_exits_2(capsys):
    status, _, err = run_cli(
        capsys,
        "bell", "distribution",
        "--weight", "signalling", "--strength", "1.5",
    )
    assert status == 2
    record = json.loads(err)
    assert record["error"] == "ValueError"
    assert "strength" in record["message"]


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bell", "warp-drive"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bell", "free-will", "--settings", "0-45"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_parse_helpers():
    assert parse_settings("0:45, 90:135") == [(0.0, 45.0), (90.0, 135.0)]
    assert parse_angles("0,45, 90") == [0.0, 45.0, 90.0]


# ---------------------------------------------------------------------------
# output files


def test_out_flag_writes_under_env_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("STATLOC_OUT_DIR", str(tmp_path))
    status, out, err = run_cli(
        capsys,
        "ising", "exact", "--format", "csv", "--out", "reports/exact.csv",
    )
    assert status == 0
    assert out == ""
    target = tmp_path / "reports" / "exact.csv"
    assert f"wrote {target}" in err
    assert target.read_text() == (GOLDEN / "cli_ising_exact_2x2.csv").read_text()


def test_absolute_out_ignores_env_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("STATLOC_OUT_DIR", str(tmp_path / "elsewhere"))
    target = tmp_path / "direct.json"
    status, _, _ = run_cli(
        capsys, "bell", "locality", "--trials", "2", "--out", str(target)
    )
    assert status == 0
    assert target.exists()
    assert not (tmp_path / "elsewhere").exists()


def test_seeded_report_reruns_are_byte_identical(tmp_path, capsys):
    first = tmp_path / "one.json"
    second = tmp_path / "two.json"
    for target in (first, second):
        status, _, _ = run_cli(
            capsys,
            "bell", "chsh-scan",
            "--angles", "0,45,90,135", "--seed", "9",
            "--out", str(target),
        )
        assert status == 0
    assert first.read_bytes() == second.read_bytes()


# ---------------------------------------------------------------------------
# spec files


def test_spec_file_matches_flags(tmp_path, capsys):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({"extent": 4, "b_deg": 60.0, "epsilon": 0.003}))
    status, from_file, _ = run_cli(
        capsys, "bell", "distribution", "--spec", str(spec_path), "--format", "csv"
    )
    assert status == 0
    status, from_flags, _ = run_cli(
        capsys, "bell", "distribution", "--theta", "60", "--format", "csv"
    )
    assert status == 0
    assert from_file == from_flags


def test_missing_and_malformed_spec_files(tmp_path, capsys):
    status, _, err = run_cli(
        capsys, "bell", "distribution", "--spec", str(tmp_path / "absent.json")
    )
    assert status == 2
    assert json.loads(err)["error"] == "SpecError"

    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    status, _, err = run_cli(capsys, "bell", "distribution", "--spec", str(bad))
    assert status == 2
    assert json.loads(err)["error"] == "SpecError"

    listy = tmp_path / "list.json"
    listy.write_text("[1, 2]")
    status, _, err = run_cli(capsys, "bell", "distribution", "--spec", str(listy))
    assert status == 2
    assert "object" in json.loads(err)["message"]

    typo = tmp_path / "typo.json"
    typo.write_text(json.dumps({"extent": 4, "b_degrees": 60.0}))
    status, _, err = run_cli(capsys, "bell", "distribution", "--spec", str(typo))
    assert status == 2
    record = json.loads(err)
    assert record["error"] == "ValidationError"
    assert "b_degrees" in record["message"]
