import csv
import json

import numpy as np
import pytest

from homplots import PlotError, render_field, render_rates
from homplots.cli import main

COLUMNS = ["experiment", "suite", "d", "r", "nu_expected", "eps", "h",
           "norm_name", "value", "slope", "slope_model", "r_squared",
           "verdict"]


def write_csv(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: r.get(c, "") for c in COLUMNS})


def rate_rows(experiment="exp", slope=0.5, nu=0.5, norm="R_L2"):
    rows = []
    for k in range(2, 7):
        eps = 2.0 ** -k
        rows.append({"experiment": experiment, "suite": "theorem11",
                     "d": "2", "r": "4", "nu_expected": repr(nu),
                     "eps": repr(eps), "norm_name": norm,
                     "value": repr(1.3 * eps ** slope),
                     "slope": repr(slope), "slope_model": "power",
                     "r_squared": "1.0", "verdict": "pass"})
    return rows


def write_dump(tmp_path, values, name="field", periodic=False,
               lo=None, hi=None):
    values = np.asarray(values, dtype=np.float64)
    d = values.ndim
    lo = [-1.0] * d if lo is None else lo
    hi = [1.0] * d if hi is None else hi
    spacing = [(hi[i] - lo[i]) / values.shape[i] for i in range(d)]
    values.tofile(tmp_path / f"{name}.bin")
    side = {"name": name, "dtype": "float64", "order": "C",
            "shape": list(values.shape), "grid_shape": list(values.shape),
            "spacing": spacing, "lo": lo, "hi": hi, "periodic": periodic}
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(side))
    return str(p)


def test_rates_annotation_three_decimals(tmp_path):
    path = tmp_path / "r.csv"
    write_csv(path, rate_rows(slope=0.5))
    out = tmp_path / "r.png"
    res = render_rates(str(path), "exp", str(out))
    assert out.exists()
    assert any("slope=0.500" in a for a in res["annotations"])


def test_rates_nu_reference_annotated(tmp_path):
    path = tmp_path / "r.csv"
    write_csv(path, rate_rows(nu=0.5))
    res = render_rates(str(path), "exp", str(tmp_path / "r.png"))
    assert any("ν_r=0.5" in a for a in res["annotations"])


def test_rates_unknown_experiment(tmp_path):
    path = tmp_path / "r.csv"
    write_csv(path, rate_rows())
    with pytest.raises(PlotError):
        render_rates(str(path), "nope", str(tmp_path / "r.png"))
    rc = main(["rates", str(path), "nope", "--out", str(tmp_path / "r.png")])
    assert rc == 1


def test_rates_no_plottable_rows(tmp_path):
    path = tmp_path / "r.csv"
    write_csv(path, [{"experiment": "exp", "suite": "counterexamples",
                      "norm_name": "x", "verdict": "info"}])
    with pytest.raises(PlotError):
        render_rates(str(path), "exp", str(tmp_path / "r.png"))


def test_rates_deterministic_bytes(tmp_path):
    path = tmp_path / "r.csv"
    write_csv(path, rate_rows())
    outs = []
    for name in ("a.png", "b.png"):
        out = tmp_path / name
        assert main(["rates", str(path), "exp", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_field_constant_heatmap(tmp_path):
    side = write_dump(tmp_path, np.full((32, 32), 3.7))
    out = tmp_path / "f.png"
    res = render_field(side, str(out))
    assert out.exists()
    assert res["vmin"] == res["vmax"] == 3.7


def test_field_periodic_corrector_edges(tmp_path):
    n = 64
    x = (np.arange(n) + 0.5) / n
    vals = np.sin(2 * np.pi * x)[:, None] * np.cos(2 * np.pi * x)[None, :]
    side = write_dump(tmp_path, vals, periodic=True, lo=[0.0, 0.0],
                      hi=[1.0, 1.0])
    out = tmp_path / "w.png"
    assert main(["field", side, "--out", str(out)]) == 0
    # a scrambled non-periodic field must trip the edge assertion
    rng = np.random.default_rng(0)
    bad = write_dump(tmp_path, rng.standard_normal((n, n)), name="bad",
                     periodic=True, lo=[0.0, 0.0], hi=[1.0, 1.0])
    with pytest.raises(PlotError):
        render_field(bad, str(tmp_path / "bad.png"))


def test_field_shape_mismatch(tmp_path):
    side = write_dump(tmp_path, np.zeros((8, 8)))
    data = json.loads((tmp_path / "field.json").read_text())
    data["shape"] = [8, 9]
    data["grid_shape"] = [8, 9]
    (tmp_path / "field.json").write_text(json.dumps(data))
    with pytest.raises(PlotError):
        render_field(side, str(tmp_path / "f.png"))


def test_field_1d_profile(tmp_path):
    side = write_dump(tmp_path, np.linspace(0, 1, 50))
    out = tmp_path / "p.png"
    assert render_field(side, str(out))["shape"] == [50]
    assert out.exists()


def test_field_deterministic_bytes(tmp_path):
    side = write_dump(tmp_path, np.outer(np.arange(16), np.arange(16)) * 1.0)
    blobs = []
    for name in ("a.png", "b.png"):
        out = tmp_path / name
        render_field(side, str(out))
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]
