"""Render figures from spherewalk CLI outputs.

Consumes the CLI's documented CSV schemas:

- experiment curves: ``trial,t_or_k,value,series_name``
- Brownian path traces: ``euclid_time,hyper_time,re,im``

Figure kinds: ``sphere_trace`` (CP^1 trace via inverse stereographic
projection from the north pole [1:0] into 3-space), ``lyapunov``,
``oscillation``, ``cesaro``, ``harmonic_hist``, ``trend``.

Rendering is a pure function of the inputs and the pinned style; the
only external content is the SHA-256 of the run manifest named in the
figure spec, embedded in the image metadata.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import warnings
from collections import defaultdict

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

EXPERIMENT_COLUMNS = ["trial", "t_or_k", "value", "series_name"]
PATH_COLUMNS = ["euclid_time", "hyper_time", "re", "im"]
KINDS = ("sphere_trace", "lyapunov", "oscillation", "cesaro",
         "harmonic_hist", "trend")

STYLE = {
    "figure.figsize": (6.0, 4.5),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
    "svg.hashsalt": "spherewalk-plots",
}


class SchemaMismatch(Exception):
    """Input CSV columns do not match the documented schema."""


def read_curves(path: str) -> dict[str, list[tuple[int, float, float]]]:
    """Parse an experiment curves CSV into series -> [(trial, t, value)]."""
    rows = _read_rows(path, EXPERIMENT_COLUMNS)
    series = defaultdict(list)
    for row in rows:
        series[row["series_name"]].append(
            (int(row["trial"]), float(row["t_or_k"]), float(row["value"])))
    return dict(series)


def read_path(path: str) -> np.ndarray:
    """Parse a Brownian path CSV into complex disc coordinates."""
    rows = _read_rows(path, PATH_COLUMNS)
    return np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])


def _read_rows(path: str, expected: list[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in expected if c not in header]
        if missing:
            raise SchemaMismatch(
                f"{path}: missing columns {missing}; found {header}")
        unknown = [c for c in header if c not in expected]
        if unknown:
            warnings.warn(f"{path}: ignoring unknown columns {unknown}")
        return list(reader)


def _require_series(curves: dict, name: str, path: str) -> np.ndarray:
    if name not in curves:
        raise SchemaMismatch(
            f"{path}: no series {name!r}; found {sorted(curves)}")
    return np.array(curves[name])


def stereographic(z: np.ndarray) -> np.ndarray:
    """Inverse stereographic projection of chart points [z:1] onto the
    unit sphere, projecting from the north pole [1:0] = (0, 0, 1)."""
    s = 1.0 + np.abs(z) ** 2
    return np.stack([2.0 * z.real / s, 2.0 * z.imag / s,
                     (np.abs(z) ** 2 - 1.0) / s], axis=1)


def _figure_sphere_trace(inputs: list[str]):
    pts = stereographic(read_path(inputs[0]))
    fig = plt.figure()
    ax = fig.add_subplot(projection="3d")
    u = np.linspace(0, 2 * np.pi, 24)
    v = np.linspace(0, np.pi, 12)
    ax.plot_wireframe(np.outer(np.cos(u), np.sin(v)),
                      np.outer(np.sin(u), np.sin(v)),
                      np.outer(np.ones_like(u), np.cos(v)),
                      color="0.85", linewidth=0.3)
    ax.plot(pts[:, 0], pts[:, 1], pts[:, 2], color="C0")
    ax.scatter(*pts[0], color="C2", s=12)
    ax.scatter(*pts[-1], color="C3", s=12)
    ax.set_box_aspect((1, 1, 1))
    ax.set_title("developed trace on the sphere")
    return fig


def _per_trial(arr: np.ndarray):
    for trial in np.unique(arr[:, 0]):
        sel = arr[arr[:, 0] == trial]
        order = np.argsort(sel[:, 1], kind="stable")
        yield int(trial), sel[order, 1], sel[order, 2]


def _figure_lyapunov(inputs: list[str]):
    curves = read_curves(inputs[0])
    arr = _require_series(curves, "log_norm", inputs[0])
    fig, ax = plt.subplots()
    for trial, ks, vals in _per_trial(arr):
        mask = ks > 0
        ax.plot(ks[mask], vals[mask] / ks[mask], alpha=0.8,
                label=f"trial {trial}")
    ax.set_xlabel("n")
    ax.set_ylabel("log ||X_n|| / n")
    ax.set_title("Lyapunov exponent convergence")
    if len(np.unique(arr[:, 0])) <= 8:
        ax.legend(loc="best")
    return fig


def _figure_oscillation(inputs: list[str]):
    curves = read_curves(inputs[0])
    arr = _require_series(curves, "osc", inputs[0])
    fig, ax = plt.subplots()
    for _, ts, vals in _per_trial(arr):
        ax.semilogy(ts, np.maximum(vals, 1e-16), alpha=0.5, color="C0")
    ax.set_xlabel("tail start T")
    ax.set_ylabel("chordal tail oscillation")
    ax.set_title("tail oscillation of the developed path")
    return fig


def _figure_cesaro(inputs: list[str]):
    curves = read_curves(inputs[0])
    arr = _require_series(curves, "cesaro", inputs[0])
    fig, ax = plt.subplots()
    ts_all = []
    for _, ts, vals in _per_trial(arr):
        ax.plot(ts, vals, alpha=0.4, color="C0")
        ts_all.append((ts, vals))
    if ts_all:
        grid = ts_all[0][0]
        stack = np.stack([np.interp(grid, ts, vs) for ts, vs in ts_all])
        ax.plot(grid, np.median(stack, axis=0), color="C3", linewidth=2.0,
                label="median")
        ax.legend(loc="lower right")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("t")
    ax.set_ylabel("c(t, eps)")
    ax.set_title("Cesaro concentration near the limit point")
    return fig


def _figure_harmonic_hist(inputs: list[str]):
    curves = read_curves(inputs[0])
    arr = _require_series(curves, "harmonic_angle", inputs[0])
    angles = arr[:, 2]
    bins = 24
    counts, edges = np.histogram(angles, bins=bins, range=(-np.pi, np.pi))
    expected = len(angles) / bins
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    fig, ax = plt.subplots()
    ax.bar(0.5 * (edges[:-1] + edges[1:]), counts,
           width=edges[1] - edges[0], color="C0", edgecolor="white")
    ax.axhline(expected, color="C3", linewidth=1.0)
    ax.set_xlabel("angle")
    ax.set_ylabel("count")
    ax.set_title(f"harmonic measure angles "
                 f"(chi2 = {chi2:.1f}, {bins - 1} dof)")
    return fig


def _figure_trend(inputs: list[str]):
    curves = read_curves(inputs[0])
    arr = _require_series(curves, "median_T_k", inputs[0])
    ks, med = arr[:, 1], arr[:, 2]
    order = np.argsort(ks, kind="stable")
    ks, med = ks[order], med[order]
    fig, ax = plt.subplots()
    if "T_k" in curves:
        samples = np.array(curves["T_k"])
        ax.plot(samples[:, 1], samples[:, 2], ".", color="0.7",
                markersize=3, label="per-trial T_k")
    ax.plot(ks, med, "o-", color="C0", label="median T_k")
    pos = med > 0
    if pos.sum() >= 2:
        slope, intercept = np.polyfit(ks[pos], np.log(med[pos]), 1)
        ax.plot(ks, np.exp(intercept + slope * ks), "--", color="C3",
                label=f"fit exp({slope:.3f} k)")
    ax.set_xlabel("k")
    ax.set_ylabel("occupation time T_k")
    ax.set_title("occupation time trend over blocks")
    ax.legend(loc="best")
    return fig


FIGURES = {
    "sphere_trace": _figure_sphere_trace,
    "lyapunov": _figure_lyapunov,
    "oscillation": _figure_oscillation,
    "cesaro": _figure_cesaro,
    "harmonic_hist": _figure_harmonic_hist,
    "trend": _figure_trend,
}


def load_spec(path: str) -> dict:
    with open(path) as fh:
        spec = json.load(fh)
    if spec.get("kind") not in KINDS:
        raise SchemaMismatch(
            f"figure kind must be one of {KINDS}; got {spec.get('kind')!r}")
    inputs = spec.get("inputs")
    if not inputs or not isinstance(inputs, list):
        raise SchemaMismatch("spec needs a non-empty 'inputs' list")
    if not spec.get("output"):
        raise SchemaMismatch("spec needs an 'output' path")
    return spec


def manifest_hash(path: str | None) -> str:
    if not path:
        return "none"
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def render(spec: dict) -> str:
    """Render the figure described by a loaded spec; returns the output
    path.  Deterministic given identical inputs and style."""
    style = dict(STYLE)
    style.update(spec.get("style", {}))
    digest = manifest_hash(spec.get("manifest"))
    with matplotlib.rc_context(style):
        fig = FIGURES[spec["kind"]](spec["inputs"])
        out = spec["output"]
        if out.endswith(".svg"):
            # Date: None suppresses the embedded timestamp
            meta = {"Description": f"manifest-sha256:{digest}", "Date": None}
        else:
            meta = {"manifest-sha256": digest}
        fig.savefig(out, metadata=meta)
        plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spherewalk-plots",
        description="Render one figure from spherewalk CLI outputs.")
    parser.add_argument("--spec", required=True,
                        help="path to a figure spec JSON")
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args.spec)
        out = render(spec)
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
