import json
import os

import numpy as np
import pytest

from homlab import cli


def write_config(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


COUNTEREX = """
[run]
experiments = cx
seed = 0

[cx]
suite = counterexamples
nmax = 4
"""

IDENTITY_T11 = """
[run]
experiments = ident

[ident]
suite = theorem11
family = identity
d = 2
eps = 0.25 0.125 0.0625 0.03125
resolution = 64
"""


def test_parse_config_missing_file(tmp_path):
    with pytest.raises(cli.ConfigError):
        cli.parse_config(str(tmp_path / "nope.ini"))


def test_parse_config_missing_run_section(tmp_path):
    path = write_config(tmp_path, "[only]\nsuite = counterexamples\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config(path)


def test_parse_config_unknown_suite(tmp_path):
    path = write_config(tmp_path,
                        "[run]\nexperiments = a\n\n[a]\nsuite = bogus\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config(path)


def test_parse_config_duplicate_id(tmp_path):
    path = write_config(
        tmp_path,
        "[run]\nexperiments = a a\n\n[a]\nsuite = counterexamples\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config(path)


def test_parse_config_missing_section(tmp_path):
    path = write_config(tmp_path, "[run]\nexperiments = a b\n\n"
                        "[a]\nsuite = counterexamples\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config(path)


def test_parse_config_bad_eps(tmp_path):
    path = write_config(tmp_path, "[run]\nexperiments = a\n\n"
                        "[a]\nsuite = theorem11\nfamily = identity\nd = 2\n"
                        "eps = 0.5 2.0\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config(path)


def test_parse_config_theorem11_needs_constant_background(tmp_path):
    path = write_config(tmp_path, "[run]\nexperiments = a\n\n"
                        "[a]\nsuite = theorem11\nfamily = trig\nd = 2\n"
                        "eps = 0.25 0.125 0.0625 0.03125\n")
    with pytest.raises(cli.ConfigError):
        cli.parse_config(path)


def test_main_config_error_exit2_no_output(tmp_path):
    path = write_config(tmp_path, "[run]\n")  # no experiments key -> empty ok
    bad = write_config(tmp_path, "[broken\n", name="bad.ini")
    out = tmp_path / "out"
    rc = cli.main(["run", bad, "--out", str(out)])
    assert rc == 2
    assert not out.exists()
    del path


def test_empty_experiment_list_writes_header_only(tmp_path):
    path = write_config(tmp_path, "[run]\nexperiments =\n")
    out = tmp_path / "out"
    rc = cli.main(["run", path, "--out", str(out)])
    assert rc == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines == [",".join(cli.CSV_COLUMNS)]


def test_counterexamples_run_exit0_and_columns(tmp_path):
    path = write_config(tmp_path, COUNTEREX)
    out = tmp_path / "out"
    rc = cli.main(["run", path, "--out", str(out)])
    assert rc == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == ",".join(cli.CSV_COLUMNS)
    assert len(lines) > 1
    verdicts = {line.split(",")[-1] for line in lines[1:]}
    assert verdicts <= {"pass", "info"}
    summary = json.loads((out / "summary.json").read_text())
    assert summary["exit_status"] == 0
    assert summary["experiments"]["cx"]["status"] == "ok"


def test_run_outputs_byte_deterministic(tmp_path):
    path = write_config(tmp_path, COUNTEREX)
    blobs = []
    for sub in ("o1", "o2"):
        out = tmp_path / sub
        assert cli.main(["run", path, "--out", str(out)]) == 0
        blobs.append(((out / "results.csv").read_bytes(),
                      (out / "summary.json").read_bytes()))
    assert blobs[0] == blobs[1]


def test_theorem11_identity_degenerate(tmp_path):
    path = write_config(tmp_path, IDENTITY_T11)
    out = tmp_path / "out"
    rc = cli.main(["run", path, "--out", str(out)])
    assert rc == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert any("pass" == line.split(",")[-1] for line in lines[1:])


def test_solver_error_exit3_partial_csv(tmp_path):
    path = write_config(tmp_path, IDENTITY_T11 + "iteration_cap = 1\n")
    out = tmp_path / "out"
    rc = cli.main(["run", path, "--out", str(out)])
    assert rc == 3
    import csv
    with open(out / "results.csv") as f:
        rows = list(csv.reader(f))
    assert len(rows) == 2
    assert rows[1][-1].startswith("error: non-convergence")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["exit_status"] == 3
    assert summary["experiments"]["ident"]["status"] == "solver-error"


def test_worker_env_override_bad_value(tmp_path, monkeypatch):
    path = write_config(tmp_path, COUNTEREX)
    monkeypatch.setenv(cli.WORKER_ENV, "lots")
    rc = cli.main(["run", path, "--out", str(tmp_path / "out")])
    assert rc == 2


def test_worker_env_override_good_value(tmp_path, monkeypatch):
    path = write_config(tmp_path, COUNTEREX)
    monkeypatch.setenv(cli.WORKER_ENV, "2")
    rc = cli.main(["run", path, "--out", str(tmp_path / "out")])
    assert rc == 0


def test_dump_fields_sidecar_consistent(tmp_path):
    cfg = ("[run]\nexperiments = per\n\n[per]\nsuite = assumptions\n"
           "family = trig\nd = 1\ncell_resolution = 256\n")
    path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    rc = cli.main(["run", path, "--out", str(out), "--dump-fields"])
    assert rc == 0
    side = json.loads((out / "per_corrector_w0.json").read_text())
    data = np.fromfile(out / "per_corrector_w0.bin", dtype=np.float64)
    assert data.size == int(np.prod(side["shape"]))
    assert side["grid_shape"] == side["shape"][:len(side["grid_shape"])]
    assert side["periodic"] is True
    # zero-mean gauge survives the round trip
    assert abs(data.reshape(side["shape"]).mean()) < 1e-10


def test_band_verdict_case_insensitive():
    # configparser lower-cases option names; bounds on mixed-case keys
    # must still be found
    opts = {"min_slope_r_l2": "0.8", "max_slope_r_l2": "2.0"}
    assert cli._band_verdict(opts, "slope_R_L2", 1.0) == "pass"
    assert cli._band_verdict(opts, "slope_R_L2", 0.5) == "fail"
    assert cli._band_verdict(opts, "slope_R_L2", 2.5) == "fail"
    assert cli._band_verdict({}, "slope_R_L2", 1.0) == "info"


def test_fmt_round_trips_floats():
    for v in (1.0 / 3.0, 1e-300, 0.1, 123456.789):
        assert float(cli._fmt(v)) == v
    assert cli._fmt("pass") == "pass"
    assert cli._fmt(7) == "7"
    assert cli._fmt(float("nan")) == "nan"
