"""Publication-style faceted figures from tidy analysis CSVs.

Rendering is a pure function of the input table: every statistic drawn or
annotated comes from the CSV, except the line and spline fits computed
here, whose coefficients are also written to a JSON sidecar for audit.
Facets lay out with player type and team safety varying vertically and
start scheme and gene origin varying horizontally.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from scipy.interpolate import make_smoothing_spline

FIGURE_KINDS = ("ribbon_time_series", "histogram_overlay", "scatter_fits")

REQUIRED_COLUMNS = {
    "ribbon_time_series": {
        "attack_kind", "start_scheme", "friendly_fire", "origin", "regime",
        "generation", "mean", "ci_low", "ci_high", "p", "df", "significant",
    },
    "histogram_overlay": {
        "attack_kind", "start_scheme", "friendly_fire", "origin", "source",
        "gene_count", "rescaled", "p", "significant",
    },
    "scatter_fits": {
        "attack_kind", "start_scheme", "friendly_fire", "origin", "regime",
        "gene_count", "value",
    },
}

REGIME_COLORS = {"CNE": "#d95f02", "ZFEL": "#1b9e77"}
SOURCE_COLORS = {"evolved": "#d95f02", "sampled": "#7570b3"}
SHADE = "#d9d9d9"


class SchemaError(ValueError):
    """The CSV does not carry the columns the figure kind needs."""


def _check_schema(frame: pd.DataFrame, kind: str) -> None:
    missing = REQUIRED_COLUMNS[kind] - set(frame.columns)
    if missing:
        raise SchemaError(
            f"{kind} input is missing columns: {', '.join(sorted(missing))}"
        )


def _facets(frame: pd.DataFrame):
    rows = sorted(frame[["attack_kind", "friendly_fire"]].drop_duplicates().itertuples(index=False))
    cols = sorted(frame[["start_scheme", "origin"]].drop_duplicates().itertuples(index=False))
    return rows, cols


def _facet_grid(frame: pd.DataFrame, scale: float = 2.2):
    rows, cols = _facets(frame)
    fig, axes = plt.subplots(
        len(rows),
        len(cols),
        figsize=(scale * len(cols) + 1.5, scale * len(rows) + 1.0),
        squeeze=False,
        sharex=True,
    )
    return fig, axes, rows, cols


def _facet_slice(frame, row, col):
    return frame[
        (frame["attack_kind"] == row.attack_kind)
        & (frame["friendly_fire"] == row.friendly_fire)
        & (frame["start_scheme"] == col.start_scheme)
        & (frame["origin"] == col.origin)
    ]


def _decorate(ax, row, col, is_top, is_left):
    if is_top:
        ax.set_title(f"{col.start_scheme} / {col.origin}", fontsize=8)
    if is_left:
        ax.set_ylabel(f"{row.attack_kind} / {row.friendly_fire}", fontsize=8)
    ax.tick_params(labelsize=7)


def _annotate_test(ax, sub):
    p = sub["p"].dropna()
    if p.empty:
        return
    text = f"p={p.iloc[0]:.2g}"
    if "df" in sub.columns:
        df = sub["df"].dropna()
        if not df.empty:
            text += f", df={df.iloc[0]:.3g}"
    ax.text(0.02, 0.95, text, transform=ax.transAxes, fontsize=6, va="top")


def _shade_if_not_significant(ax, sub):
    flags = sub["significant"].dropna()
    if not flags.empty and not bool(flags.iloc[0]):
        ax.set_facecolor(SHADE)


def render_ribbon_time_series(frame: pd.DataFrame, out: Path) -> None:
    _check_schema(frame, "ribbon_time_series")
    fig, axes, rows, cols = _facet_grid(frame)
    for i, row in enumerate(rows):
        for j, col in enumerate(cols):
            ax = axes[i][j]
            sub = _facet_slice(frame, row, col)
            _decorate(ax, row, col, i == 0, j == 0)
            if sub.empty:
                ax.set_axis_off()
                continue
            _shade_if_not_significant(ax, sub)
            for regime, group in sub.groupby("regime"):
                group = group.sort_values("generation")
                color = REGIME_COLORS.get(regime, "black")
                ax.plot(group["generation"], group["mean"], color=color, lw=1.2, label=regime)
                ax.fill_between(
                    group["generation"], group["ci_low"], group["ci_high"],
                    color=color, alpha=0.25, lw=0,
                )
            _annotate_test(ax, sub)
    _finish(fig, axes, out)


def render_histogram_overlay(frame: pd.DataFrame, out: Path) -> None:
    _check_schema(frame, "histogram_overlay")
    fig, axes, rows, cols = _facet_grid(frame)
    for i, row in enumerate(rows):
        for j, col in enumerate(cols):
            ax = axes[i][j]
            sub = _facet_slice(frame, row, col)
            _decorate(ax, row, col, i == 0, j == 0)
            if sub.empty:
                ax.set_axis_off()
                continue
            _shade_if_not_significant(ax, sub)
            width = 0.4
            for offset, (source, group) in zip((-width / 2, width / 2), sub.groupby("source")):
                ax.bar(
                    group["gene_count"] + offset,
                    group["rescaled"],
                    width=width,
                    color=SOURCE_COLORS.get(source, "grey"),
                    label=source,
                )
            _annotate_test(ax, sub)
    _finish(fig, axes, out)


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def _spline_fit(x: np.ndarray, y: np.ndarray):
    """Cubic smoothing spline with GCV-selected smoothing; needs at least
    four distinct x values.  Duplicate x values are averaged first."""
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    unique, inverse = np.unique(xs, return_inverse=True)
    if len(unique) < 4:
        return None
    means = np.bincount(inverse, weights=ys) / np.bincount(inverse)
    return make_smoothing_spline(unique.astype(float), means)


def render_scatter_fits(frame: pd.DataFrame, out: Path) -> dict:
    _check_schema(frame, "scatter_fits")
    fig, axes, rows, cols = _facet_grid(frame)
    sidecar: dict = {"figure": "scatter_fits", "fits": []}
    for i, row in enumerate(rows):
        for j, col in enumerate(cols):
            ax = axes[i][j]
            sub = _facet_slice(frame, row, col)
            _decorate(ax, row, col, i == 0, j == 0)
            if sub.empty:
                ax.set_axis_off()
                continue
            for regime, group in sub.groupby("regime"):
                color = REGIME_COLORS.get(regime, "black")
                x = group["gene_count"].to_numpy(dtype=float)
                y = group["value"].to_numpy(dtype=float)
                ax.scatter(x, y, s=6, color=color, alpha=0.5)
                if len(np.unique(x)) < 2:
                    continue
                slope, intercept = _linear_fit(x, y)
                grid = np.linspace(x.min(), x.max(), 50)
                ax.plot(grid, slope * grid + intercept, color=color, lw=1.0)
                entry = {
                    "attack_kind": row.attack_kind,
                    "friendly_fire": row.friendly_fire,
                    "start_scheme": col.start_scheme,
                    "origin": col.origin,
                    "regime": regime,
                    "n": int(len(x)),
                    "linear": {"slope": slope, "intercept": intercept},
                }
                spline = _spline_fit(x, y)
                if spline is not None:
                    ax.plot(grid, spline(grid), color=color, lw=1.0, ls="--")
                    entry["spline"] = {
                        "knots": [float(v) for v in spline.t],
                        "coefficients": [float(v) for v in spline.c],
                    }
                sidecar["fits"].append(entry)
    _finish(fig, axes, out)
    sidecar_path = out.with_suffix(out.suffix + ".fits.json")
    sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return sidecar


def _finish(fig, axes, out: Path) -> None:
    handles, labels = [], []
    for ax_row in axes:
        for ax in ax_row:
            h, l = ax.get_legend_handles_labels()
            for hi, li in zip(h, l):
                if li not in labels:
                    handles.append(hi)
                    labels.append(li)
    if labels:
        fig.legend(handles, labels, loc="lower center", ncol=len(labels), fontsize=8)
    fig.tight_layout(rect=(0, 0.04, 1, 1))
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)


def render(csv_path: str | Path, kind: str, out_path: str | Path) -> Path:
    """Render one figure kind from an analysis CSV to an image file."""
    if kind not in FIGURE_KINDS:
        raise SchemaError(f"unknown figure kind {kind!r}; pick from {FIGURE_KINDS}")
    frame = pd.read_csv(csv_path)
    out = Path(out_path)
    if kind == "ribbon_time_series":
        render_ribbon_time_series(frame, out)
    elif kind == "histogram_overlay":
        render_histogram_overlay(frame, out)
    else:
        render_scatter_fits(frame, out)
    return out
