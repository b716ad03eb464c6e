"""Config-driven experiment runner.

Configs are INI files: a [run] section naming the experiments, then one
section per experiment.  Example:

    [run]
    experiments = compact
    seed = 0

    [compact]
    suite = theorem11
    family = compact-defect
    d = 2
    eps = 0.25 0.125 0.0625 0.03125 0.015625
    resolution = 512

Outputs: results.csv (fixed column order), summary.json, and optional grid
dumps (raw float64 + JSON sidecar) under --out.  Exit codes: 0 all pass,
1 acceptance failure, 2 config error, 3 solver non-convergence.
"""

import argparse
import configparser
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import cellsolve, defectsolve, verify
from .fd import SolverError
from .fields import construct_field
from .grid import torus_grid

CSV_COLUMNS = ["experiment", "suite", "d", "r", "nu_expected", "eps", "h",
               "norm_name", "value", "slope", "slope_model", "r_squared",
               "verdict"]

SUITES = ("theorem11", "oracle1d", "counterexamples", "assumptions",
          "green", "lipschitz")

WORKER_ENV = "HOMLAB_WORKERS"


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# config parsing

def _float_list(text):
    toks = text.replace(",", " ").split()
    if not toks:
        raise ConfigError("empty list value")
    return [float(t) for t in toks]


def parse_config(path):
    """Read and validate the INI config; returns a run-plan dict."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if "run" not in cp:
        raise ConfigError("missing [run] section")
    run = cp["run"]
    names = run.get("experiments", "").replace(",", " ").split()
    experiments = []
    seen = set()
    for name in names:
        if name in seen:
            raise ConfigError(f"duplicate experiment id {name!r}")
        seen.add(name)
        if name not in cp:
            raise ConfigError(f"experiment section [{name}] missing")
        sec = dict(cp[name])
        suite = sec.pop("suite", None)
        if suite not in SUITES:
            raise ConfigError(
                f"[{name}] unknown or missing suite {suite!r}; "
                f"expected one of {SUITES}")
        exp = {"id": name, "suite": suite, "options": sec}
        _validate_experiment(exp)
        experiments.append(exp)
    return {
        "experiments": experiments,
        "seed": run.getint("seed", fallback=0),
        "out": run.get("out", fallback="homlab-out"),
        "workers": run.getint("workers", fallback=1),
    }


def _validate_experiment(exp):
    opts = exp["options"]
    suite = exp["suite"]
    name = exp["id"]
    if suite in ("theorem11", "green", "lipschitz"):
        if "eps" not in opts:
            raise ConfigError(f"[{name}] missing eps list")
        eps = _float_list(opts["eps"])
        if any(not (0.0 < e < 1.0) for e in eps):
            raise ConfigError(f"[{name}] eps values must lie in (0, 1)")
    if suite in ("theorem11", "green", "lipschitz", "assumptions"):
        if "family" not in opts:
            raise ConfigError(f"[{name}] missing field family")
        spec = _field_spec(opts)
        try:
            field = construct_field(spec)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"[{name}] bad field spec: {exc}")
        if suite == "theorem11" and field.aper_const is None:
            raise ConfigError(f"[{name}] theorem11 suite supports "
                              "constant-background families only")
    if suite == "oracle1d" and "eps" in opts:
        _float_list(opts["eps"])


def _field_spec(opts):
    spec = {"family": opts["family"]}
    for key in ("d", "r", "c", "rho", "eta", "delta"):
        if key in opts:
            spec[key] = float(opts[key])
    if "d" in spec:
        spec["d"] = int(spec["d"])
    return spec


# ---------------------------------------------------------------------------
# row helpers

def _row(experiment, suite, sort_key, **kw):
    row = {c: "" for c in CSV_COLUMNS}
    row["experiment"] = experiment
    row["suite"] = suite
    row.update(kw)
    row["_sort"] = sort_key
    return row


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "pass" if x else "fail"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def _verdict(ok):
    return "pass" if ok else "fail"


def _band_verdict(opts, key, value):
    """pass/fail against optional min_<key>/max_<key> config bounds;
    'info' when no bound is configured.  configparser lower-cases option
    names, so the lookup is case-insensitive."""
    lo = opts.get(f"min_{key}".lower())
    hi = opts.get(f"max_{key}".lower())
    if lo is None and hi is None:
        return "info"
    if lo is not None and value < float(lo):
        return "fail"
    if hi is not None and value > float(hi):
        return "fail"
    return "pass"


def _dump(gridfield, name, outdir):
    grid = gridfield.grid
    vals = np.asarray(gridfield.values, dtype=np.float64)
    base = os.path.join(outdir, name)
    vals.tofile(base + ".bin")
    sidecar = {
        "name": name,
        "dtype": "float64",
        "order": "C",
        "shape": list(vals.shape),
        "grid_shape": list(grid.shape),
        "spacing": [float(h) for h in grid.h],
        "lo": [float(v) for v in grid.lo],
        "hi": [float(v) for v in grid.hi],
        "periodic": bool(grid.periodic),
    }
    with open(base + ".json", "w") as f:
        json.dump(sidecar, f, sort_keys=True, indent=2)
        f.write("\n")


# ---------------------------------------------------------------------------
# suite runners: each returns (rows, summary)

def _run_theorem11(exp, seed, dump_dir):
    opts = exp["options"]
    name = exp["id"]
    field = construct_field(_field_spec(opts))
    eps_list = sorted(_float_list(opts["eps"]), reverse=True)
    resolution = int(opts.get("resolution", 512))
    tol = float(opts.get("tol", 1e-10))
    cap = int(opts["iteration_cap"]) if "iteration_cap" in opts else None
    d, r = field.d, field.r
    nu = min(1.0, d / r)

    degenerate = field.a_tilde is None
    correctors = verify.build_defect_correctors(field)
    potential = None
    if not degenerate:
        src_half = float(opts.get("potential_half_side", 16.0))
        src_cells = int(opts.get("potential_cells", 256))
        out_half = float(opts.get("potential_out_half_side",
                                  1.0 / min(eps_list) + 2.0))
        potential, _ = verify.build_defect_potential(
            field, correctors, src_half, src_cells, out_half_side=out_half)
    floor = None
    if degenerate:
        h = 2.0 / resolution
        floor = 10.0 * (tol + h * h)
    suite = verify.theorem11_suite(field, eps_list, resolution,
                                   correctors=correctors, potential=potential,
                                   tol=tol, degenerate_floor=floor,
                                   iteration_cap=cap)
    rows = []
    for norm, rep in suite["reports"].items():
        if "error" in rep:
            rows.append(_row(name, "theorem11", (norm, 0.0), d=d, r=r,
                             nu_expected=nu, norm_name=norm,
                             verdict=f"error: {rep['error']}"))
            continue
        if rep.get("degenerate"):
            verdict = _verdict(rep["pass"])
            slope = slope_model = r2 = ""
        else:
            slope, slope_model = rep["slope"], rep["model"]
            r2 = rep["r_squared"]
            verdict = _band_verdict(opts, f"slope_{norm}", rep["slope"])
        for eps, value in rep["samples"]:
            rows.append(_row(name, "theorem11", (norm, -eps), d=d, r=r,
                             nu_expected=nu, eps=eps, h=2.0 / resolution,
                             norm_name=norm, value=value, slope=slope,
                             slope_model=slope_model, r_squared=r2,
                             verdict=verdict))
    if dump_dir is not None:
        row0 = suite["rows"][0]
        out = verify.remainder_pipeline(field, row0["eps"], resolution,
                                        correctors, potential=potential,
                                        tol=tol, keep_fields=True)
        _dump(out["R"], f"{name}_R", dump_dir)
        _dump(out["u_eps"], f"{name}_u_eps", dump_dir)
    summary = {"nu_expected": nu, "degenerate": degenerate,
               "reports": {k: {kk: vv for kk, vv in rep.items()
                               if kk != "samples"}
                           for k, rep in suite["reports"].items()}}
    return rows, summary


def _run_oracle1d(exp, seed, dump_dir):
    opts = exp["options"]
    name = exp["id"]
    r = float(opts.get("r", 2.0))
    delta = float(opts.get("delta", 1.0))
    eps_list = _float_list(opts.get("eps", "")) if "eps" in opts else \
        [2.0 ** -k for k in range(3, 9)]
    rel_max = float(opts.get("rel_err_max", 1e-6))
    res = verify.oracle_1d(r, delta, eps_list)
    rows = []
    for row in res["rows"]:
        ok = row["rel_err"] <= rel_max
        rows.append(_row(name, "oracle1d", (f"rel_err_x{row['x']:g}",
                                            -row["eps"]),
                         d=1, r=r, nu_expected=1.0 / r, eps=row["eps"],
                         norm_name=f"rel_err_x{row['x']:g}",
                         value=row["rel_err"], verdict=_verdict(ok)))
    for label, fit in (("absgradR_x1", res["slope_raw"]),
                       ("absgradR_x1_logcorrected",
                        res["slope_log_corrected"])):
        verdict = _band_verdict(opts, f"slope_{label}", fit["slope"])
        for eps, value in fit["samples"]:
            rows.append(_row(name, "oracle1d", (label, -eps), d=1, r=r,
                             nu_expected=1.0 / r, eps=eps, norm_name=label,
                             value=value, slope=fit["slope"],
                             slope_model=fit["model"],
                             r_squared=fit["r_squared"], verdict=verdict))
    summary = {"max_rel_err": res["max_rel_err"],
               "slope_raw": res["slope_raw"]["slope"],
               "slope_log_corrected": res["slope_log_corrected"]["slope"]}
    return rows, summary


def _run_counterexamples(exp, seed, dump_dir):
    opts = exp["options"]
    name = exp["id"]
    nmax = int(opts.get("nmax", 20))
    quad_tol = float(opts.get("quad_tol", 1e-10))
    rows = []
    dy = verify.averaged_flux_check_dyadic(n_range=range(1, nmax + 1))
    for rec in dy:
        n = rec["n"]
        ok = abs(rec["int_a_wprime"] + 1.0) <= quad_tol
        rows.append(_row(name, "counterexamples",
                         ("dyadic_int_a_wprime", n), d=1,
                         norm_name="dyadic_int_a_wprime", eps=n,
                         value=rec["int_a_wprime"], verdict=_verdict(ok)))
        rows.append(_row(name, "counterexamples",
                         ("dyadic_int_wprime", n), d=1,
                         norm_name="dyadic_int_wprime", eps=n,
                         value=rec["int_wprime"], verdict="info"))
        rows.append(_row(name, "counterexamples",
                         ("dyadic_int_a_one_plus_wprime", n), d=1,
                         norm_name="dyadic_int_a_one_plus_wprime", eps=n,
                         value=rec["int_a_one_plus_wprime"], verdict="info"))
    tr = verify.transpose_counterexample(seed=seed)
    rows.append(_row(name, "counterexamples", ("transpose_div_a_ek_max", 0),
                     d=2, norm_name="transpose_div_a_ek_max",
                     value=tr["div_a_ek_max"],
                     verdict=_verdict(tr["div_a_ek_max"] <= 1e-10)))
    rows.append(_row(name, "counterexamples",
                     ("transpose_growth_exponent", 0), d=2,
                     norm_name="transpose_growth_exponent",
                     value=tr["growth_exponent"], slope=tr["growth_exponent"],
                     slope_model="power",
                     verdict=_verdict(tr["non_sublinear"])))
    summary = {"dyadic_worst_dev": max(abs(r["int_a_wprime"] + 1.0)
                                       for r in dy),
               "transpose_growth_exponent": tr["growth_exponent"],
               "transpose_div_a_ek_max": tr["div_a_ek_max"]}
    return rows, summary


def _run_assumptions(exp, seed, dump_dir):
    opts = exp["options"]
    name = exp["id"]
    field = construct_field(_field_spec(opts))
    rows = []
    summary = {}
    if field.a_tilde is not None:
        corr = verify.build_defect_correctors(field)
        sub = verify.sublinearity_check(corr[0], seed=seed)
        verdict = _verdict(sub["pass"])
        for s, ratio in zip(sub["scales"], sub["ratios"]):
            rows.append(_row(name, "assumptions",
                             ("sublinearity_ratio", s), d=field.d,
                             r=field.r, norm_name="sublinearity_ratio",
                             eps=s, value=ratio, verdict=verdict))
        summary["sublinearity"] = sub
    else:
        res = int(opts.get("cell_resolution", 256))
        grid = torus_grid(res, field.d)
        cs = cellsolve.solve_all_periodic_correctors(field, grid)
        astar = cellsolve.homogenized_tensor(cs, grid)
        correctors = [defectsolve.PeriodicGridCorrector(c["w"], c["grad_w"])
                      for c in cs]
        windows = [((0.0,) * field.d, 0.25), ((0.3, 0.7)[:field.d], 0.125)]
        flux_tol = float(opts.get("flux_tol", 1e-2))
        recs = verify.averaged_flux_check_periodic(field, correctors, astar,
                                                   windows)
        for i, rec in enumerate(recs):
            ok = rec["grad_mean_dev"] <= flux_tol \
                and rec["flux_dev"] <= flux_tol
            rows.append(_row(name, "assumptions", ("window_grad_mean_dev", i),
                             d=field.d, eps=rec["eps"],
                             norm_name="window_grad_mean_dev",
                             value=rec["grad_mean_dev"],
                             verdict=_verdict(ok)))
            rows.append(_row(name, "assumptions", ("window_flux_dev", i),
                             d=field.d, eps=rec["eps"],
                             norm_name="window_flux_dev",
                             value=rec["flux_dev"], verdict=_verdict(ok)))
        summary["windows"] = recs
        summary["astar"] = astar["matrix"].tolist()
        if dump_dir is not None:
            _dump(cs[0]["w"], f"{name}_corrector_w0", dump_dir)
    return rows, summary


def _run_green(exp, seed, dump_dir):
    opts = exp["options"]
    name = exp["id"]
    field = construct_field(_field_spec(opts))
    eps_list = sorted(_float_list(opts["eps"]), reverse=True)
    resolution = int(opts.get("resolution", 48))
    res = verify.green_estimates_check(field, eps_list,
                                       resolution=resolution)
    nu = min(1.0, field.d / field.r)
    # extended tier: failures downgrade to warnings
    verdict = "pass" if res["pass"] else "warn"
    rows = []
    slope = res["fit"].get("slope", "")
    r2 = res["fit"].get("r_squared", "")
    for rec in res["rows"]:
        rows.append(_row(name, "green", ("green_diff", -rec["eps"]),
                         d=field.d, r=field.r, nu_expected=nu,
                         eps=rec["eps"], h=2.0 / resolution,
                         norm_name="green_diff", value=rec["diff"],
                         slope=slope, slope_model="power", r_squared=r2,
                         verdict=verdict))
    rows.append(_row(name, "green", ("green_reciprocity", 0), d=field.d,
                     norm_name="green_reciprocity",
                     value=res["reciprocity_error"], verdict="info"))
    rows.append(_row(name, "green", ("green_min", 0), d=field.d,
                     norm_name="green_min", value=res["min_G"],
                     verdict=_verdict(res["min_G"] >= -1e-10)))
    summary = {"pass": res["pass"], "tier": res["tier"],
               "slope": res["fit"].get("slope"),
               "decreasing": res["decreasing"],
               "reciprocity_error": res["reciprocity_error"],
               "min_G": res["min_G"]}
    return rows, summary


def _run_lipschitz(exp, seed, dump_dir):
    opts = exp["options"]
    name = exp["id"]
    field = construct_field(_field_spec(opts))
    eps_list = sorted(_float_list(opts["eps"]), reverse=True)
    R = float(opts.get("radius", 0.5))
    resolution = int(opts.get("resolution", 512))
    res = verify.lipschitz_stability_check(field, eps_list, R=R,
                                           resolution=resolution)
    verdict = _verdict(res["pass"])
    rows = []
    for eps, ratio in zip(res["eps"], res["ratios"]):
        rows.append(_row(name, "lipschitz", ("lipschitz_ratio", -eps),
                         d=field.d, eps=eps, norm_name="lipschitz_ratio",
                         value=ratio, verdict=verdict))
    rows.append(_row(name, "lipschitz", ("lipschitz_spread", 0), d=field.d,
                     norm_name="lipschitz_spread", value=res["spread"],
                     verdict=verdict))
    return rows, {"spread": res["spread"], "pass": res["pass"]}


_RUNNERS = {
    "theorem11": _run_theorem11,
    "oracle1d": _run_oracle1d,
    "counterexamples": _run_counterexamples,
    "assumptions": _run_assumptions,
    "green": _run_green,
    "lipschitz": _run_lipschitz,
}


# ---------------------------------------------------------------------------
# orchestration

def _run_experiment(exp, seed, dump_dir):
    try:
        rows, summary = _RUNNERS[exp["suite"]](exp, seed, dump_dir)
        return {"id": exp["id"], "rows": rows, "summary": summary,
                "status": "ok"}
    except SolverError as exc:
        row = _row(exp["id"], exp["suite"], ("", 0),
                   verdict=f"error: non-convergence: {exc}")
        return {"id": exp["id"], "rows": [row],
                "summary": {"error": str(exc)}, "status": "solver-error"}


def run(plan, out_dir, workers, seed, dump_fields):
    os.makedirs(out_dir, exist_ok=True)
    dump_dir = out_dir if dump_fields else None
    results = []
    if plan["experiments"]:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_run_experiment, exp, seed, dump_dir)
                    for exp in plan["experiments"]]
            results = [f.result() for f in futs]
    results.sort(key=lambda r: r["id"])

    rows = []
    for res in results:
        rows.extend(res["rows"])
    rows.sort(key=lambda r: (r["experiment"], r["suite"], r["_sort"]))

    csv_path = os.path.join(out_dir, "results.csv")
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])

    solver_error = any(res["status"] == "solver-error" for res in results)
    failed = any(str(row["verdict"]).startswith(("fail", "error"))
                 for row in rows)
    if solver_error:
        status = 3
    elif failed:
        status = 1
    else:
        status = 0

    summary = {
        "seed": seed,
        "exit_status": status,
        "experiments": {res["id"]: {"status": res["status"],
                                    "suite": exp["suite"],
                                    "summary": _jsonable(res["summary"])}
                        for res, exp in zip(results,
                                            sorted(plan["experiments"],
                                                   key=lambda e: e["id"]))},
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, sort_keys=True, indent=2)
        f.write("\n")
    return status


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="homlab", description="homogenization experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run experiments from a config file")
    runp.add_argument("config")
    runp.add_argument("--out", default=None, help="output directory")
    runp.add_argument("--workers", type=int, default=None,
                      help="worker cap for concurrent experiments")
    runp.add_argument("--seed", type=int, default=None,
                      help="seed for sampling plans")
    runp.add_argument("--dump-fields", action="store_true",
                      help="write grid dumps next to the CSV")
    args = parser.parse_args(argv)

    try:
        plan = parse_config(args.config)
    except (ConfigError, configparser.Error) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    workers = plan["workers"]
    if args.workers is not None:
        workers = args.workers
    env_cap = os.environ.get(WORKER_ENV)
    if env_cap is not None:
        try:
            workers = int(env_cap)
        except ValueError:
            print(f"config error: bad {WORKER_ENV}={env_cap!r}",
                  file=sys.stderr)
            return 2
    workers = max(1, workers)
    seed = plan["seed"] if args.seed is None else args.seed
    out_dir = args.out if args.out is not None else plan["out"]

    try:
        return run(plan, out_dir, workers, seed, args.dump_fields)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
