"""Scaling figures and the multi-experiment report.

Figures display what the simulation side measured; they never refit.
A statistic whose stored fits include a logarithmic-growth entry that
beats the power law in R^2 is drawn on a semilog-x axis with the
c0 + c1 ln L line (the d=4 fluctuation picture); a power-law fit is
drawn on log-log axes with the C L^(-alpha) line; a series without
fits is drawn on linear axes with no line.  Output is deterministic
for fixed inputs: fixed figure geometry and no timestamps or hostnames
in the image payload.
"""

from __future__ import annotations

import dataclasses
import html
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .reader import PlotDataError, Series, SeriesFile, load_series_file

__all__ = ["RenderedFigure", "plot_report", "plot_scaling"]

FIGSIZE = (6.4, 4.4)
DPI = 130
# Strip the library version stamp so image bytes survive upgrades.
PNG_METADATA = {"Software": None}


@dataclasses.dataclass(frozen=True)
class RenderedFigure:
    """Where the figure went and what its headline annotation says."""

    path: Path
    mode: str          # "power-law" | "log-growth" | "raw"
    annotation: str
    exponent: float | None


def _pick_mode(series: Series) -> str:
    fits = series.fits
    power = fits.get("power_law")
    growth = fits.get("log_growth")
    if growth is not None and (power is None
                               or growth["r_squared"] > power["r_squared"]):
        return "log-growth"
    if power is not None:
        return "power-law"
    return "raw"


def _draw_series(ax, series: Series, seed_rows) -> tuple[str, str,
                                                         float | None]:
    scales = np.array(series.scales(), dtype=np.float64)
    values = np.array(series.values(), dtype=np.float64)
    stderrs = np.array(series.stderrs(), dtype=np.float64)
    mode = _pick_mode(series)

    if seed_rows:
        ax.plot([r.scale for r in seed_rows], [r.value for r in seed_rows],
                linestyle="none", marker=".", color="0.75", markersize=4,
                zorder=1, label="replicates")
    ax.errorbar(scales, values, yerr=stderrs, linestyle="none", marker="o",
                markersize=5, capsize=3, color="C0", zorder=3,
                label="disorder mean")

    grid = np.geomspace(scales.min(), scales.max(), 128) \
        if scales.min() > 0 else np.linspace(scales.min(), scales.max(), 128)

    if mode == "log-growth":
        fit = series.fits["log_growth"]
        ax.set_xscale("log")
        ax.plot(grid, fit["offset"] + fit["slope"] * np.log(grid), "C1-",
                zorder=2, label="c0 + c1 ln L")
        annotation = (f"c1 = {fit['slope']:.3g}, "
                      f"R² = {fit['r_squared']:.3f}")
        return mode, annotation, None

    if mode == "power-law":
        fit = series.fits["power_law"]
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.plot(grid, fit["prefactor"] * grid ** -fit["exponent"], "C1-",
                zorder=2, label="C L^(-α)")
        annotation = (f"α = {fit['exponent']:.2f}, "
                      f"R² = {fit['r_squared']:.3f}")
        return mode, annotation, fit["exponent"]

    return mode, "no fit stored", None


def _finish_axes(ax, statistic: str, annotation: str) -> None:
    ax.set_xlabel("scale L")
    ax.set_ylabel(statistic)
    ax.set_title(statistic)
    ax.text(0.02, 0.04, annotation, transform=ax.transAxes, fontsize=10,
            bbox={"boxstyle": "round", "facecolor": "white",
                  "edgecolor": "0.6"})
    ax.legend(loc="best", fontsize=8)


def plot_scaling(series_file: SeriesFile, statistic: str,
                 out_path: str | Path) -> RenderedFigure:
    """Render one statistic's scale series with its stored fit line."""
    series = series_file.series.get(statistic)
    if series is None:
        known = ", ".join(sorted(series_file.series)) or "none"
        raise PlotDataError(
            f"statistic {statistic!r} has no series in "
            f"{series_file.directory} (available: {known})")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=FIGSIZE)
    try:
        mode, annotation, exponent = _draw_series(
            ax, series, series_file.rows_for(statistic))
        _finish_axes(ax, statistic, annotation)
        fig.savefig(out_path, dpi=DPI, metadata=PNG_METADATA)
    finally:
        plt.close(fig)
    return RenderedFigure(path=out_path, mode=mode, annotation=annotation,
                          exponent=exponent)


def _draw_rows_only(ax, series_file: SeriesFile) -> None:
    # No scale series: show every measured cell grouped by statistic.
    by_stat: dict[str, list] = {}
    for row in series_file.rows:
        by_stat.setdefault(row.statistic, []).append(row)
    for k, (name, rows) in enumerate(sorted(by_stat.items())):
        ax.errorbar([r.seed for r in rows], [r.value for r in rows],
                    yerr=[r.stderr for r in rows], linestyle="none",
                    marker="o", markersize=4, capsize=2, color=f"C{k % 10}",
                    label=name)
    ax.set_xlabel("replicate")
    ax.set_ylabel("value")
    ax.legend(loc="best", fontsize=8)


def _experiment_figure(series_file: SeriesFile, out_path: Path) -> None:
    names = sorted(series_file.series)
    if not names:
        fig, ax = plt.subplots(figsize=FIGSIZE)
        try:
            _draw_rows_only(ax, series_file)
            fig.suptitle(series_file.experiment)
            fig.savefig(out_path, dpi=DPI, metadata=PNG_METADATA)
        finally:
            plt.close(fig)
        return
    ncols = min(len(names), 3)
    nrows = math.ceil(len(names) / ncols)
    fig, axes = plt.subplots(
        nrows, ncols, squeeze=False,
        figsize=(FIGSIZE[0] * ncols, FIGSIZE[1] * nrows))
    try:
        for ax, name in zip(axes.ravel(), names):
            _, annotation, _ = _draw_series(
                ax, series_file.series[name], series_file.rows_for(name))
            _finish_axes(ax, name, annotation)
        for ax in axes.ravel()[len(names):]:
            ax.set_axis_off()
        fig.suptitle(series_file.experiment)
        fig.savefig(out_path, dpi=DPI, metadata=PNG_METADATA)
    finally:
        plt.close(fig)


def _index_entry(series_file: SeriesFile, image_name: str) -> str:
    seeds = ", ".join(str(s) for s in series_file.seeds)
    return (
        f"<h2>{html.escape(series_file.experiment)}</h2>\n"
        f"<p>config sha256 <code>{html.escape(series_file.config_sha256)}"
        f"</code><br>seeds: {html.escape(seeds)}</p>\n"
        f'<img src="{html.escape(image_name)}" '
        f'alt="{html.escape(series_file.experiment)}">\n')


def _discover(in_dir: Path) -> list[Path]:
    if (in_dir / "manifest.json").is_file():
        return [in_dir]
    found = sorted(child for child in in_dir.iterdir()
                   if child.is_dir() and (child / "manifest.json").is_file())
    if not found:
        raise PlotDataError(f"no experiment outputs under {in_dir}")
    return found


def plot_report(in_dir: str | Path, out_dir: str | Path) -> Path:
    """One figure per experiment directory plus an index page.

    ``in_dir`` is either a single experiment directory or a directory
    of them.  Inputs are only ever read; everything lands in
    ``out_dir``.  Returns the index page path.
    """
    in_dir = Path(in_dir)
    if not in_dir.is_dir():
        raise PlotDataError(f"{in_dir} is not a directory")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    sections = []
    for exp_dir in _discover(in_dir):
        series_file = load_series_file(exp_dir)
        image_name = f"{series_file.experiment}.png"
        _experiment_figure(series_file, out_dir / image_name)
        sections.append(_index_entry(series_file, image_name))

    index = out_dir / "index.html"
    index.write_text(
        "<!doctype html>\n<html><head><meta charset=\"utf-8\">\n"
        "<title>Experiment report</title></head>\n<body>\n"
        "<h1>Experiment report</h1>\n" + "".join(sections)
        + "</body></html>\n", encoding="utf-8")
    return index
