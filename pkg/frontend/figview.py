#!/usr/bin/env python3
"""Offline figure rendering for the simulator's CSV/JSON exports.

    figview.py --spec plot.json --out fig.png

A plot spec selects one of four kinds and names its input files:

* ``dynamics``     population/fidelity time series with optional +-1 sigma
                   bands (columns ``mean_X`` / ``std_X``);
* ``heatmap``      a 2-D parameter map (row parameter in the first column),
                   optionally overlaying the carrier-zero guide lines read
                   from the ``bessel_zeros.json`` sidecar;
* ``decay``        time series on a shared linear axis with an optional
                   exponential guide curve;
* ``connectivity`` static-drive fidelity curves with the matched-interaction
                   markers of the modulated points.

Rendering is a pure file-to-file transformation with fixed output
dimensions; all numeric content (including overlay positions) comes from
the input files.  Exit status 1 names any missing file or column.
"""
import argparse
import csv
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

DEFAULT_FIGSIZE = (6.4, 4.2)
DEFAULT_DPI = 125


class SpecError(Exception):
    pass


def load_table(path):
    p = Path(path)
    if not p.exists():
        raise SpecError(f"input file not found: {path}")
    with open(p, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise SpecError(f"input file has no data rows: {path}")
    header = rows[0]
    body = rows[1:]
    return header, body


def column(header, body, name, path):
    if name not in header:
        raise SpecError(f"missing column {name!r} in {path} (have: {', '.join(header)})")
    idx = header.index(name)
    return np.array([float(r[idx]) for r in body])


def new_figure(spec):
    figsize = spec.get("figsize", DEFAULT_FIGSIZE)
    fig, ax = plt.subplots(figsize=tuple(figsize), dpi=spec.get("dpi", DEFAULT_DPI))
    return fig, ax


def finish(fig, ax, spec, out_path):
    if "title" in spec:
        ax.set_title(spec["title"])
    if "xlim" in spec:
        ax.set_xlim(spec["xlim"])
    if "ylim" in spec:
        ax.set_ylim(spec["ylim"])
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def render_dynamics(spec, out_path):
    path = spec["input"]
    header, body = load_table(path)
    x_name = spec.get("x", "time_us")
    x = column(header, body, x_name, path)
    fig, ax = new_figure(spec)
    for series in spec["series"]:
        y = column(header, body, series["column"], path)
        (line,) = ax.plot(x, y, label=series.get("label", series["column"]))
        if "band" in series:
            s = column(header, body, series["band"], path)
            ax.fill_between(x, y - s, y + s, alpha=0.25, color=line.get_color(), linewidth=0)
    ax.set_xlabel(spec.get("xlabel", x_name))
    ax.set_ylabel(spec.get("ylabel", "population"))
    ax.legend(frameon=False)
    finish(fig, ax, spec, out_path)


def render_decay(spec, out_path):
    # same data layout as dynamics but tuned for slow decays: optional
    # exponential guide a*exp(-t/tau)+c drawn from given constants
    path = spec["input"]
    header, body = load_table(path)
    x = column(header, body, spec.get("x", "time_us"), path)
    fig, ax = new_figure(spec)
    for series in spec["series"]:
        y = column(header, body, series["column"], path)
        ax.plot(x, y, ".", ms=3, label=series.get("label", series["column"]))
        guide = series.get("exp_guide")
        if guide:
            a, tau, c = guide["amplitude"], guide["decay_time"], guide.get("offset", 0.0)
            ax.plot(x, a * np.exp(-x / tau) + c, "-", lw=1,
                    label=f"{series.get('label', '')} fit ({tau:.1f} us)")
    ax.set_xlabel(spec.get("xlabel", "time (us)"))
    ax.set_ylabel(spec.get("ylabel", "fidelity"))
    ax.legend(frameon=False)
    finish(fig, ax, spec, out_path)


def render_heatmap(spec, out_path):
    path = spec["input"]
    header, body = load_table(path)
    row_param = header[0]
    col_values = np.array([float(v) for v in header[1:]])
    row_values = np.array([float(r[0]) for r in body])
    grid = np.array([[float(v) for v in r[1:]] for r in body])
    fig, ax = new_figure(spec)
    mesh = ax.pcolormesh(col_values, row_values, grid, shading="nearest",
                         cmap=spec.get("cmap", "viridis"),
                         vmin=spec.get("vmin"), vmax=spec.get("vmax"))
    fig.colorbar(mesh, ax=ax, label=spec.get("colorbar_label", "value"))
    overlays = spec.get("overlays", {})
    if "bessel_zeros" in overlays:
        zpath = Path(overlays["bessel_zeros"])
        if not zpath.exists():
            raise SpecError(f"overlay file not found: {zpath}")
        zeros = json.loads(zpath.read_text())
        lo, hi = row_values.min(), row_values.max()
        for z in zeros.get("j0", []):
            if lo <= z <= hi:
                ax.axhline(z, color="w", ls="--", lw=1.0)
        for z in zeros.get("j1", []):
            if lo <= z <= hi:
                ax.axhline(z, color="lime", ls="--", lw=1.0)
    ax.set_xlabel(spec.get("xlabel", "column value"))
    ax.set_ylabel(spec.get("ylabel", row_param))
    finish(fig, ax, spec, out_path)


def render_connectivity(spec, out_path):
    static_path = spec["static_input"]
    header, body = load_table(static_path)
    groups = {}
    for r in body:
        groups.setdefault(r[0], []).append((float(r[1]), float(r[2])))
    fig, ax = new_figure(spec)
    for label, pts in groups.items():
        pts.sort()
        v = [p[0] for p in pts]
        f = [p[1] for p in pts]
        ax.plot(v, f, "-", label=f"static ({label})")
    if "points_input" in spec:
        ph, pb = load_table(spec["points_input"])
        for r in pb:
            row = dict(zip(ph, r))
            fid = float(row["max_fidelity"])
            ax.axhline(fid, ls="-.", lw=0.8, color="gray")
            matched = float(row["matched_static_v_over_rabi"])
            if np.isfinite(matched):
                ax.plot([matched], [fid], "o", color="k")
    ax.set_xlabel(spec.get("xlabel", "interaction / drive"))
    ax.set_ylabel(spec.get("ylabel", "maximum fidelity"))
    ax.legend(frameon=False)
    finish(fig, ax, spec, out_path)


RENDERERS = {
    "dynamics": render_dynamics,
    "decay": render_decay,
    "heatmap": render_heatmap,
    "connectivity": render_connectivity,
}


def render(spec, out_path):
    kind = spec.get("kind")
    if kind not in RENDERERS:
        raise SpecError(f"unknown plot kind {kind!r}; expected one of {sorted(RENDERERS)}")
    for key in ("input", "static_input", "points_input"):
        if key in spec and not Path(spec[key]).exists():
            raise SpecError(f"input file not found: {spec[key]}")
    RENDERERS[kind](spec, out_path)


def main(argv=None):
    parser = argparse.ArgumentParser(description="render a figure from exported CSV/JSON data")
    parser.add_argument("--spec", required=True, help="plot spec JSON file")
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    args = parser.parse_args(argv)
    spec_path = Path(args.spec)
    if not spec_path.exists():
        print(f"error: spec file not found: {spec_path}", file=sys.stderr)
        return 1
    try:
        spec = json.loads(spec_path.read_text())
    except json.JSONDecodeError as exc:
        print(f"error: invalid spec JSON: {exc}", file=sys.stderr)
        return 1
    # resolve relative inputs against the spec file location
    for key in ("input", "static_input", "points_input"):
        if key in spec and not Path(spec[key]).is_absolute():
            spec[key] = str((spec_path.parent / spec[key]).resolve())
    ov = spec.get("overlays", {})
    if "bessel_zeros" in ov and not Path(ov["bessel_zeros"]).is_absolute():
        ov["bessel_zeros"] = str((spec_path.parent / ov["bessel_zeros"]).resolve())
    try:
        render(spec, args.out)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
