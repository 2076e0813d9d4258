"""Runner configs, reports, exit codes, CLI, and the HTTP service."""

import json
import threading
import time
from fractions import Fraction as F

import pytest
from fastapi.testclient import TestClient

from dtlab.cli import main
from dtlab.errors import PrecisionError, UsageError
from dtlab.pwpoly import PW_X, PiecewisePoly
from dtlab.runner import (REPORT_SCHEMA, RunConfig, execute,
                          parse_measure, read_report, run_dimension,
                          run_moments, run_verify)
from dtlab.service import app


# -- config --------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(UsageError):
        RunConfig("nope", {})
    with pytest.raises(UsageError):
        RunConfig("verify", {"bogus": 1})
    with pytest.raises(UsageError):
        RunConfig("verify", {"seed": -1})
    with pytest.raises(UsageError):
        RunConfig("verify", {"seed": 2 ** 64})
    cfg = RunConfig("verify", {"suite": "fisher", "seed": 7})
    assert cfg.echo()["parameters"] == {"seed": 7, "suite": "fisher"}


def test_parse_measure():
    mu, exact = parse_measure("delta:0")
    assert exact == PiecewisePoly.constant(0)
    mu, exact = parse_measure("uniform")
    assert exact == PW_X
    mu, exact = parse_measure("atomic:0:1/2,1:1/2")
    assert exact == PiecewisePoly.step([0, F(1, 2), 1], [0, 1])
    mu, exact = parse_measure("delta:1+2j")
    assert exact is None
    mu, exact = parse_measure("poly:[0,1]:0,1")
    assert exact == PW_X
    with pytest.raises(UsageError):
        parse_measure("garbage")
    with pytest.raises(UsageError):
        parse_measure("atomic:1")


# -- verify ---------------------------------------------------------------------


def test_verify_fisher_suite():
    report = run_verify(RunConfig("verify", {"suite": "fisher"}))
    assert report.passed and len(report.records) == 3
    assert all(r.provenance == "exact" for r in report.records)


def test_verify_unknown_suite_and_empty_guard():
    with pytest.raises(UsageError):
        run_verify(RunConfig("verify", {"suite": "nope"}))
    with pytest.raises(UsageError, match="no checks selected"):
        run_verify(RunConfig("verify", {"suite": "conjugate", "max_len": -1}))


def test_verify_small_suites_pass():
    for suite, extra in (("conjugate", {"max_len": 2, "degree": 1}),
                         ("circularity", {"max_len": 4}),
                         ("distribution", {"max_len": 3}),
                         ("liberation", {"max_len": 2}),
                         ("statelemma", {"max_len": 2}),
                         ("bounds", {}),
                         ("nonsa", {"max_len": 4})):
        report = run_verify(RunConfig("verify", {"suite": suite, **extra}))
        assert report.passed, suite


def test_verify_nonsquare_parameters_exit_as_usage_error():
    with pytest.raises(UsageError, match="Monte Carlo"):
        run_verify(RunConfig("verify", {"suite": "conjugate", "t": "1/3",
                                        "csq": "2/3", "max_len": 1}))


# -- moments ----------------------------------------------------------------------


def test_moments_runner_and_oracles():
    cfg = RunConfig("moments", {"mu": "delta:0", "c": "1", "n": 64, "reps": 30,
                                "words": ["ZZ*", "ZZ"], "seed": 42})
    report = run_moments(cfg)
    assert report.passed
    assert {r.name for r in report.records} == {"moment[ZZ*]", "moment[ZZ]"}
    assert all(r.provenance == "monte-carlo" for r in report.records)
    assert "estimates" in report.artifacts


def test_moments_exact_oracle_with_diagonal_measure():
    cfg = RunConfig("moments", {"mu": "atomic:0:1/2,1:1/2", "c": "1", "n": 96,
                                "reps": 60, "words": ["ZZ*", "DD"], "seed": 5})
    report = run_moments(cfg)
    assert report.passed
    # exact oracle: tau(ZZ*) = int(step^2) + 1/2 = 1/2 + 1/2 = 1
    rec = [r for r in report.records if r.name == "moment[ZZ*]"][0]
    assert rec.expected == "1.0"
    rec = [r for r in report.records if r.name == "moment[DD]"][0]
    assert rec.expected == "0.5"


def test_moments_validation():
    with pytest.raises(UsageError):
        run_moments(RunConfig("moments", {"n": 4, "reps": 10}))
    with pytest.raises(UsageError):
        run_moments(RunConfig("moments", {"n": 64, "reps": 1}))


def test_moments_y_words_use_circular_oracle():
    cfg = RunConfig("moments", {"mu": "delta:0", "c": "1", "n": 128, "reps": 40,
                                "words": ["YY*", "YY*YY*"], "seed": 3})
    report = run_moments(cfg)
    recs = {r.name: r for r in report.records}
    assert recs["moment[YY*]"].expected == "1.0"
    assert recs["moment[YY*YY*]"].expected == "2.0"
    assert report.passed


# -- dimension ---------------------------------------------------------------------


def test_dimension_acceptance_grid():
    cfg = RunConfig("dimension", {"csq": "3/4",
                                  "t_grid": ["1/4", "1/16", "1/64", "1/256"]})
    report = run_dimension(cfg)
    assert report.passed
    rel = [r for r in report.records if r.name == "delta_rel_diag"][0]
    assert "equality=True" in rel.actual
    dz = [r for r in report.records if r.name == "delta_Z"][0]
    assert dz.expected.startswith(">= 1")


def test_dimension_analytic_flag():
    cfg = RunConfig("dimension", {"csq": "3/4", "analytic_flag": True})
    report = run_dimension(cfg)
    dz = [r for r in report.records if r.name == "delta_Z"][0]
    assert dz.actual == "2" and dz.passed
    assert "analytic input" in dz.tolerance  # the flag stays visible in the record


def test_dimension_grid_validation():
    with pytest.raises(UsageError):
        run_dimension(RunConfig("dimension", {"t_grid": ["1/4"]}))


# -- reports ------------------------------------------------------------------------


def test_report_serialization_and_versioning(tmp_path):
    report = run_verify(RunConfig("verify", {"suite": "fisher"}))
    path = tmp_path / "report.json"
    path.write_bytes(report.to_json_bytes())
    data = read_report(path)
    assert data["schema_version"] == REPORT_SCHEMA
    bad = dict(data)
    bad["schema_version"] = "99.0"
    path.write_text(json.dumps(bad))
    with pytest.raises(UsageError, match="unsupported report schema"):
        read_report(path)


def test_report_determinism_modulo_wallclock():
    cfg = RunConfig("moments", {"n": 32, "reps": 10, "seed": 9,
                                "words": ["ZZ*"]})
    a = run_moments(cfg).to_json_bytes(drop_wallclock=True)
    b = run_moments(cfg).to_json_bytes(drop_wallclock=True)
    assert a == b


def test_report_csv_shape():
    report = run_verify(RunConfig("verify", {"suite": "fisher"}))
    lines = report.to_csv_text().strip().splitlines()
    assert lines[0] == "name,expected,actual,tolerance,passed,provenance"
    assert len(lines) == 4


def test_provenance_tags_are_canonical():
    from dtlab.runner import PROVENANCE_TAGS
    for cmd, params in (("verify", {"suite": "bounds"}),
                        ("verify", {"suite": "statelemma", "max_len": 1}),
                        ("dimension", {"csq": "3/4", "analytic_flag": True}),
                        ("moments", {"n": 32, "reps": 6, "words": ["ZZ*"]})):
        report = execute(RunConfig(cmd, params))
        assert {r.provenance for r in report.records} <= set(PROVENANCE_TAGS)


def test_report_config_echo_is_rerunnable():
    cfg = RunConfig("moments", {"n": 32, "reps": 6, "seed": 4, "words": ["ZZ*"]})
    report = run_moments(cfg)
    echo = report.to_dict()["config"]
    again = execute(RunConfig(echo["command"], echo["parameters"]))
    assert again.to_json_bytes(drop_wallclock=True) == \
        report.to_json_bytes(drop_wallclock=True)


def test_spectra_point_spectrum_records():
    from dtlab.runner import run_spectra
    cfg = RunConfig("spectra", {"n": 64, "reps": 2, "cutout_n": 64,
                                "cutout_k": [4], "kaplansky_pairs": 5,
                                "pencil_count": 3, "gammas": ["0.4+0.1j"],
                                "point_spectrum_n": 48, "seed": 6})
    report = run_spectra(cfg)
    ps = [r for r in report.records if r.name.startswith("point_spectrum")]
    assert len(ps) == 1 and ps[0].passed
    assert "finite-n caveat" in ps[0].expected


def test_statelemma_records_carry_serialized_polys():
    report = run_verify(RunConfig("verify", {"suite": "statelemma", "max_len": 1}))
    assert any("[0,1]:0,1" in r.name for r in report.records)


# -- CLI ----------------------------------------------------------------------------


def test_cli_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", "--suite", "fisher"]) == 0
    capsys.readouterr()
    assert main(["verify", "--suite", "nope"]) == 2
    assert "usage error" in capsys.readouterr().err


def test_cli_unknown_set_key():
    assert main(["verify", "--set", "bogus=1"]) == 2


def test_cli_out_and_formats(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["verify", "--suite", "fisher", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["passed"] is True
    out_csv = tmp_path / "r.csv"
    assert main(["verify", "--suite", "fisher", "--format", "csv",
                 "--out", str(out_csv)]) == 0
    assert out_csv.read_text().startswith("name,expected")


def test_cli_moments_csv_alongside(tmp_path):
    out = tmp_path / "m.json"
    code = main(["moments", "--n", "32", "--reps", "8", "--seed", "1",
                 "--words", "ZZ*", "--out", str(out)])
    assert code == 0
    sidecar = tmp_path / "m.csv"
    assert sidecar.exists()
    assert sidecar.read_text().startswith("word,mean,stderr")


def test_cli_byte_identical_reruns(tmp_path):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    args = ["moments", "--n", "32", "--reps", "8", "--seed", "7",
            "--words", "ZZ*;ZZ"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    a, b = json.loads(out1.read_text()), json.loads(out2.read_text())
    a.pop("wall_clock_s"), b.pop("wall_clock_s")
    assert a == b


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "dim.toml"
    cfg.write_text('command = "dimension"\ncsq = "3/4"\nanalytic_flag = true\n')
    out = tmp_path / "dim.json"
    assert main(["dimension", "--config", str(cfg), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    dz = [r for r in data["records"] if r["name"] == "delta_Z"][0]
    assert dz["actual"] == "2"
    wrong = tmp_path / "wrong.toml"
    wrong.write_text('command = "moments"\n')
    assert main(["dimension", "--config", str(wrong)]) == 2


def test_cli_fisher_profile_export(tmp_path):
    prof = tmp_path / "profile.csv"
    out = tmp_path / "f.json"
    assert main(["fisher", "--t", "1/4", "--csq", "3/4", "--profile-out",
                 str(prof), "--out", str(out)]) == 0
    assert prof.read_text().startswith("t,phi,exact")


def test_cli_precision_error_exit_code(capsys):
    # a two-point grid spans 0.3 decades: the profile estimator cannot run
    code = main(["dimension", "--set", "t_grid=1/4,1/8"])
    assert code == 3
    assert "precision error" in capsys.readouterr().err
    with pytest.raises(PrecisionError):
        run_dimension(RunConfig("dimension", {"t_grid": ["1/4", "1/8"]}))


# -- service --------------------------------------------------------------------------


client = TestClient(app)


def test_service_health():
    r = client.get("/health")
    assert r.status_code == 200 and r.json()["status"] == "ok"


def test_service_verify_roundtrip():
    r = client.post("/verify", json={"suite": "fisher"})
    assert r.status_code == 200
    body = r.json()
    assert body["passed"] and body["schema_version"] == REPORT_SCHEMA
    assert len(body["records"]) == 3


def test_service_validation_errors():
    assert client.post("/verify", json={"suite": "nope"}).status_code == 400
    assert client.post("/moments", json={"n": 4}).status_code == 422
    assert client.post("/moments", json={"reps": 1}).status_code == 422


def test_service_moments_and_dimension():
    r = client.post("/moments", json={"n": 32, "reps": 8, "seed": 1,
                                      "words": ["ZZ*"]})
    assert r.status_code == 200 and r.json()["passed"]
    r = client.post("/dimension", json={"csq": "3/4", "analytic_flag": True})
    body = r.json()
    dz = [x for x in body["records"] if x["name"] == "delta_Z"][0]
    assert dz["actual"] == "2"


def test_live_server_thin_client(tmp_path):
    import uvicorn

    config = uvicorn.Config(app, host="127.0.0.1", port=8731, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        for _ in range(100):
            if server.started:
                break
            time.sleep(0.05)
        else:
            pytest.skip("uvicorn did not start")
        out = tmp_path / "remote.json"
        code = main(["verify", "--suite", "fisher",
                     "--server", "http://127.0.0.1:8731", "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["passed"] is True
    finally:
        server.should_exit = True
        thread.join(timeout=5)
