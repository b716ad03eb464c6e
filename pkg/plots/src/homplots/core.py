"""Rendering of rate plots and field heatmaps from homlab outputs."""

import csv
import json
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


class PlotError(Exception):
    pass


# PNG metadata is pinned so output bytes depend only on the input data
_METADATA = {"Software": "homplots"}


def _float(text):
    try:
        return float(text)
    except (TypeError, ValueError):
        return None


def read_rate_rows(csv_path, experiment):
    """Rows of one experiment with numeric (eps, value), grouped by norm."""
    with open(csv_path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise PlotError(f"no data rows in {csv_path}")
    ids = {r["experiment"] for r in rows}
    if experiment not in ids:
        raise PlotError(f"unknown experiment id {experiment!r}; "
                        f"available: {sorted(ids)}")
    groups = {}
    nu = None
    for r in rows:
        if r["experiment"] != experiment:
            continue
        if nu is None:
            nu = _float(r.get("nu_expected"))
        eps, val = _float(r.get("eps")), _float(r.get("value"))
        if eps is None or val is None or eps <= 0 or val <= 0:
            continue
        groups.setdefault(r["norm_name"], []).append(
            {"eps": eps, "value": val, "slope": _float(r.get("slope"))})
    if not any(groups.values()):
        raise PlotError(f"experiment {experiment!r} has no plottable "
                        "(eps, value) rows")
    return groups, nu


def render_rates(csv_path, experiment, out_path):
    """Log-log norms vs eps with the fitted line and nu_r reference.

    Slopes come from the CSV; nothing is refitted here.  Returns a summary
    dict with the annotation strings (used by tests).
    """
    groups, nu = read_rate_rows(csv_path, experiment)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    annotations = []
    all_eps, all_val = [], []
    for name in sorted(groups):
        recs = sorted(groups[name], key=lambda r: r["eps"])
        eps = np.array([r["eps"] for r in recs])
        val = np.array([r["value"] for r in recs])
        all_eps.extend(eps)
        all_val.extend(val)
        slope = recs[0]["slope"]
        if slope is None:
            label = name
            ax.loglog(eps, val, "o-", ms=4, lw=0.8, label=label)
        else:
            label = f"{name} (slope={slope:.3f})"
            ax.loglog(eps, val, "o", ms=4, label=label)
            # anchor the fitted line at the geometric-mean point
            e0 = np.exp(np.mean(np.log(eps)))
            v0 = np.exp(np.mean(np.log(val)))
            ax.loglog(eps, v0 * (eps / e0) ** slope, "-", lw=0.8,
                      color=ax.lines[-1].get_color())
        annotations.append(label)
    if nu is not None and all_eps:
        eps = np.array(sorted(set(all_eps)))
        v0 = np.exp(np.mean(np.log(all_val)))
        e0 = np.exp(np.mean(np.log(all_eps)))
        label = f"reference ν_r={nu:g}"
        ax.loglog(eps, v0 * (eps / e0) ** nu, "k--", lw=1.0, label=label)
        annotations.append(label)
    ax.set_xlabel("eps")
    ax.set_ylabel("norm value")
    ax.set_title(experiment)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=100, metadata=_METADATA)
    plt.close(fig)
    return {"out": out_path, "annotations": annotations, "nu_expected": nu,
            "norms": sorted(groups)}


def load_dump(sidecar_path):
    """Grid dump (values, sidecar dict) from the JSON sidecar path."""
    with open(sidecar_path) as f:
        side = json.load(f)
    bin_path = os.path.splitext(sidecar_path)[0] + ".bin"
    values = np.fromfile(bin_path, dtype=np.dtype(side["dtype"]))
    shape = tuple(side["shape"])
    if values.size != int(np.prod(shape)):
        raise PlotError(
            f"dump/sidecar shape mismatch: {values.size} values in "
            f"{bin_path}, sidecar says {shape}")
    values = values.reshape(shape, order=side.get("order", "C"))
    if shape != tuple(side["grid_shape"]):
        raise PlotError(f"only scalar grid fields are plottable; "
                        f"shape {shape} vs grid {side['grid_shape']}")
    return values, side


def periodic_edge_mismatch(values, side):
    """Max opposite-edge disagreement per axis, in units of spacing * ptp.

    On a periodic cell-centered grid the first and last layers are one
    spacing apart, so for resolved fields the mismatch is O(h * |grad|).
    """
    ptp = float(np.ptp(values)) or 1.0
    worst = 0.0
    for ax in range(values.ndim):
        lo_layer = np.take(values, 0, axis=ax)
        hi_layer = np.take(values, -1, axis=ax)
        h_rel = side["spacing"][ax] / (side["hi"][ax] - side["lo"][ax])
        worst = max(worst, float(np.abs(lo_layer - hi_layer).max())
                    / (h_rel * ptp))
    return worst


def render_field(sidecar_path, out_path, edge_slack=20.0):
    """Heatmap (2D) or profile (1D) of a grid dump, axes in physical
    coordinates.  For periodic dumps the opposite-edge agreement is
    asserted to within edge_slack spacings of gradient."""
    values, side = load_dump(sidecar_path)
    if side.get("periodic"):
        mism = periodic_edge_mismatch(values, side)
        if mism > edge_slack:
            raise PlotError(f"periodic dump edges disagree: mismatch "
                            f"{mism:.2f} x (spacing * ptp) > {edge_slack}")
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    if values.ndim == 1:
        x = side["lo"][0] + (np.arange(values.size) + 0.5) * side["spacing"][0]
        ax.plot(x, values, lw=1.0)
        ax.set_xlabel("x")
        ax.set_ylabel(side["name"])
    elif values.ndim == 2:
        extent = (side["lo"][0], side["hi"][0], side["lo"][1], side["hi"][1])
        im = ax.imshow(values.T, origin="lower", extent=extent,
                       aspect="equal", interpolation="nearest")
        fig.colorbar(im, ax=ax, label=side["name"])
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    else:
        plt.close(fig)
        raise PlotError(f"cannot plot a {values.ndim}-d field")
    ax.set_title(side["name"])
    fig.tight_layout()
    fig.savefig(out_path, dpi=100, metadata=_METADATA)
    plt.close(fig)
    return {"out": out_path, "shape": list(values.shape),
            "vmin": float(values.min()), "vmax": float(values.max())}
