"""Experiment orchestration and deterministic persistence.

Every runner takes a validated config plus the CLI knobs and writes the
same trio into the output directory: ``results.csv`` (one row per
scale/seed/statistic cell), ``manifest.json`` (config echo, seed table,
version), and ``series.json`` (per-statistic scale series with fits,
the file the plotting component reads).  Output bytes depend only on
the config and the code, never on wall clock or worker count: cells
are scheduled largest scale first for balance, but rows are sorted
before writing and the wall-time column is pinned to 0.0.  Real
per-cell timings exist only in memory unless a caller opts into the
``timings.json`` sidecar, which sits outside the determinism contract.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import hashlib
import json
import time
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .. import __version__
from ..disorder import SeededStream, sample_field
from ..gaussian_oracle import (block_average_second_moment,
                               brascamp_lieb_bound, exact_decorrelation,
                               exact_height_variance_profile, green_diagonal)
from ..green import build_kernel, sup_norm_study
from ..ground_state import dyadic_gap_statistic
from ..langevin import (LangevinConfig, LocalObservable, coupled_simulate,
                        dlr_resample_check, stability_limit)
from ..lattice import make_box
from ..observables import ScalingSeries
from .config import ExperimentConfig

__all__ = [
    "ResultRow",
    "run_coupling_scaling",
    "run_dlr_check",
    "run_green_study",
    "run_ground_state_scaling",
    "run_oracle_suite",
]

CSV_COLUMNS = ("experiment", "d", "L", "seed", "statistic", "value",
               "stderr", "walltime_s")


@dataclasses.dataclass(frozen=True)
class ResultRow:
    """One measured statistic; the CSV is exactly these, sorted."""

    experiment: str
    d: int
    L: int
    seed: int
    statistic: str
    value: float
    stderr: float
    walltime_s: float = 0.0

    def key(self) -> tuple:
        return (self.experiment, self.d, self.L, self.seed, self.statistic)


def _format(x: float) -> str:
    # repr is the shortest digit string that round-trips, and is stable
    return repr(float(x))


def _write_rows(path: Path, rows: Iterable[ResultRow]) -> None:
    ordered = sorted(rows, key=ResultRow.key)
    seen = set()
    for row in ordered:
        if row.key() in seen:
            raise ValueError(f"duplicate result row {row.key()}")
        seen.add(row.key())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in ordered:
            writer.writerow([row.experiment, row.d, row.L, row.seed,
                             row.statistic, _format(row.value),
                             _format(row.stderr), _format(row.walltime_s)])


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _series_entry(statistic: str, series: ScalingSeries,
                  log_fit=None, **extras) -> dict:
    entry: dict = {
        "statistic": statistic,
        "points": [{"scale": p.scale, "value": p.value, "stderr": p.stderr}
                   for p in series.points],
        "fits": {},
    }
    if series.fit is not None:
        entry["fits"]["power_law"] = {
            "exponent": series.fit.exponent,
            "prefactor": series.fit.prefactor,
            "r_squared": series.fit.r_squared,
        }
    if log_fit is not None:
        entry["fits"]["log_growth"] = {
            "offset": log_fit.offset,
            "slope": log_fit.slope,
            "r_squared": log_fit.r_squared,
        }
    entry.update(extras)
    return entry


class _Sink:
    """Collects rows and series, then writes the output trio at once."""

    def __init__(self, cfg: ExperimentConfig, command: str, out_dir: Path,
                 seed_offset: int, write_timings: bool = False):
        self.cfg = cfg
        self.command = command
        self.out_dir = out_dir
        self.seed_offset = seed_offset
        self.write_timings = write_timings
        self.rows: list[ResultRow] = []
        self.series: list[dict] = []
        self.timings: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def add_rows(self, rows: Iterable[ResultRow]) -> None:
        self.rows.extend(rows)

    def add_series(self, entry: dict) -> None:
        self.series.append(entry)

    def time_cell(self, label: str, elapsed: float) -> None:
        self.timings[label] = round(elapsed, 3)

    def seeds(self) -> list[int]:
        return [self.seed_offset + i for i in range(self.cfg.n_seeds)]

    def flush(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        _write_rows(self.out_dir / "results.csv", self.rows)
        manifest = {
            "schema_version": 1,
            "experiment": self.cfg.name,
            "command": self.command,
            "version": __version__,
            "config_text": self.cfg.raw_text,
            "config_sha256": hashlib.sha256(
                self.cfg.raw_text.encode("utf-8")).hexdigest(),
            "seed_offset": self.seed_offset,
            "master_seed": self.cfg.master_seed,
            "seeds": self.seeds(),
            "purposes": {"disorder": "disorder#<seed>",
                         "dynamics": "dynamics#<seed>",
                         "dlr": "dlr#<seed>",
                         "field": "field#<seed>"},
            "csv_columns": list(CSV_COLUMNS),
        }
        _dump_json(self.out_dir / "manifest.json", manifest)
        if self.series:
            _dump_json(self.out_dir / "series.json", {
                "schema_version": 1,
                "experiment": self.cfg.name,
                "series": sorted(self.series,
                                 key=lambda e: e["statistic"]),
            })
        if self.write_timings:
            self.timings["total_s"] = round(
                time.perf_counter() - self._t0, 3)
            _dump_json(self.out_dir / "timings.json", dict(self.timings))


def _run_cells(cells: Sequence[tuple], worker: Callable, threads: int,
               sink: _Sink) -> dict:
    """Largest scale first; the map is pure so order cannot leak out."""
    ordered = sorted(cells, key=lambda c: (-c[0], c[1]))
    results: dict = {}
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            futures = {pool.submit(_timed, worker, cell): cell
                       for cell in ordered}
            for fut in concurrent.futures.as_completed(futures):
                cell = futures[fut]
                results[cell], elapsed = fut.result()
                sink.time_cell(f"L{cell[0]}#{cell[1]}", elapsed)
    else:
        for cell in ordered:
            results[cell], elapsed = _timed(worker, cell)
            sink.time_cell(f"L{cell[0]}#{cell[1]}", elapsed)
    return results


def _timed(worker: Callable, cell: tuple) -> tuple:
    t0 = time.perf_counter()
    value = worker(cell)
    return value, time.perf_counter() - t0


def _aggregate(cfg: ExperimentConfig, per_cell: dict, seeds: Sequence[int],
               pick: Callable[[object], float]) -> ScalingSeries:
    series = ScalingSeries()
    for L in cfg.scales:
        values = np.array([pick(per_cell[(L, i)]) for i in seeds])
        stderr = 0.0 if values.size == 1 else \
            float(values.std(ddof=1) / np.sqrt(values.size))
        series.append(L, float(values.mean()), stderr)
    if len(series.points) >= 3 and all(p.value > 0 for p in series.points):
        series = series.fitted()
    return series


def _open_sink(cfg: ExperimentConfig, command: str, out: str | None,
               seed_offset: int, timings: bool) -> _Sink:
    out_dir = Path(out) if out else Path(cfg.out_dir())
    return _Sink(cfg, command, out_dir, seed_offset, timings)


def run_ground_state_scaling(cfg: ExperimentConfig, out: str | None = None,
                             threads: int = 1,
                             seed_offset: int = 0,
                             timings: bool = False) -> ScalingSeries:
    """Disorder-averaged dyadic ground-state gaps across scales."""
    sink = _open_sink(cfg, "ground-state", out, seed_offset, timings)
    potential = cfg.potential()
    seeds = sink.seeds()

    def worker(cell: tuple[int, int]) -> float:
        L, i = cell
        stream = SeededStream(cfg.master_seed, f"disorder#{i}")
        return dyadic_gap_statistic(cfg.dimension, L, cfg.intensity,
                                    potential, cfg.law, stream,
                                    cfg.solver_tol)

    cells = [(L, i) for L in cfg.scales for i in seeds]
    per_cell = _run_cells(cells, worker, threads, sink)
    sink.add_rows(ResultRow(cfg.name, cfg.dimension, L, i, "dyadic-gap",
                            per_cell[(L, i)], 0.0)
                  for L, i in cells)
    series = _aggregate(cfg, per_cell, seeds, lambda v: v)
    sink.add_series(_series_entry("dyadic-gap", series,
                                  degenerate=series.fit is None))
    sink.flush()
    return series


def run_coupling_scaling(cfg: ExperimentConfig, out: str | None = None,
                         threads: int = 1, seed_offset: int = 0,
                         timings: bool = False) -> dict[str, ScalingSeries]:
    """Shared-noise coupling of (scale, 2*scale) box pairs per seed.

    The coupled duration defaults to L^2 per scale; disorder and noise
    purposes are derived per replicate, with noise keyed by absolute
    coordinate so all scales of one replicate share increments.
    """
    sink = _open_sink(cfg, "couple", out, seed_offset, timings)
    potential = cfg.potential()
    seeds = sink.seeds()
    center = (0,) * cfg.dimension

    def worker(cell: tuple[int, int]):
        L, i = cell
        small = make_box(cfg.dimension, center, L)
        big = make_box(cfg.dimension, center, 2 * L)
        eta = sample_field(cfg.law, big,
                           SeededStream(cfg.master_seed, f"disorder#{i}"))
        dyn = LangevinConfig(
            dt=cfg.dt or stability_limit(cfg.dimension, potential),
            total_time=cfg.total_time or float(L * L),
            burn_in=cfg.burn_in, lam=cfg.intensity, potential=potential,
            stride=cfg.stride)
        noise = SeededStream(cfg.master_seed, f"dynamics#{i}")
        return coupled_simulate(small, big, eta, dyn, noise)

    cells = [(L, i) for L in cfg.scales for i in seeds]
    per_cell = _run_cells(cells, worker, threads, sink)
    stats = {
        "sup-gradient": lambda p: p.sup_gradient,
        "height-difference": lambda p: p.height_difference,
        "average-difference": lambda p: p.average_difference,
        "env-min": lambda p: p.env_min,
        "env-max": lambda p: p.env_max,
    }
    for name, pick in stats.items():
        sink.add_rows(ResultRow(cfg.name, cfg.dimension, L, i, name,
                                pick(per_cell[(L, i)]), 0.0)
                      for L, i in cells)
    result = {}
    for name in ("sup-gradient", "height-difference"):
        series = _aggregate(cfg, per_cell, seeds, stats[name])
        sink.add_series(_series_entry(name, series))
        result[name] = series
    sink.flush()
    return result


def run_oracle_suite(cfg: ExperimentConfig, out: str | None = None,
                     threads: int = 1, seed_offset: int = 0,
                     timings: bool = False) -> dict[str, ScalingSeries]:
    """Exact Gaussian studies at the config dimension; no sampling noise.

    Persists the center height variance across scales (with both the
    power-law and the log-growth fit, whose relative quality separates
    the dimensions), radial decorrelation and block-average decay on
    the largest box, and the Brascamp-Lieb margin per scale.
    """
    from ..observables import fit_log_growth

    sink = _open_sink(cfg, "oracle", out, seed_offset, timings)
    lam = cfg.intensity
    center = (0,) * cfg.dimension
    tol = cfg.solver_tol
    result: dict[str, ScalingSeries] = {}

    variance = ScalingSeries()
    margins = []
    for L in cfg.scales:
        box = make_box(cfg.dimension, center, L)
        variance.append(L, exact_height_variance_profile(box, lam, tol), 0.0)
        margin = (brascamp_lieb_bound(box, center, cfg.potential(), tol)
                  - green_diagonal(box, center, tol))
        margins.append(ResultRow(cfg.name, cfg.dimension, L, 0, "bl-margin",
                                 margin, 0.0))
    if len(variance.points) >= 3 and all(p.value > 0
                                         for p in variance.points):
        variance = variance.fitted()
    log_fit = None
    if len(variance.points) >= 3:
        log_fit = fit_log_growth(variance.points)
    sink.add_rows(ResultRow(cfg.name, cfg.dimension, p.scale, 0,
                            "height-variance-center", p.value, 0.0)
                  for p in variance.points)
    sink.add_rows(margins)
    sink.add_series(_series_entry("height-variance-center", variance,
                                  log_fit=log_fit))
    result["height-variance-center"] = variance

    big = make_box(cfg.dimension, center, max(cfg.scales))
    decor = ScalingSeries()
    for r in range(1, min(max(cfg.scales), 7)):
        y = (r,) + (0,) * (cfg.dimension - 1)
        decor.append(r, exact_decorrelation(big, center, y, lam, tol), 0.0)
    if len(decor.points) >= 3 and all(p.value > 0 for p in decor.points):
        decor = decor.fitted()
    sink.add_rows(ResultRow(cfg.name, cfg.dimension, p.scale, 0,
                            "decorrelation", p.value, 0.0)
                  for p in decor.points)
    sink.add_series(_series_entry("decorrelation", decor))
    result["decorrelation"] = decor

    blocks = ScalingSeries()
    for ell in [s for s in cfg.scales if s < max(cfg.scales)]:
        blocks.append(ell, block_average_second_moment(big, ell, lam, tol),
                      0.0)
    if len(blocks.points) >= 3 and all(p.value > 0 for p in blocks.points):
        blocks = blocks.fitted()
    sink.add_rows(ResultRow(cfg.name, cfg.dimension, p.scale, 0,
                            "block-average", p.value, 0.0)
                  for p in blocks.points)
    if blocks.points:
        sink.add_series(_series_entry("block-average", blocks))
        result["block-average"] = blocks
    sink.flush()
    return result


def run_green_study(cfg: ExperimentConfig, out: str | None = None,
                    threads: int = 1, seed_offset: int = 0,
                    timings: bool = False) -> ScalingSeries:
    """Representation-kernel sup norms and identity residuals per radius."""
    sink = _open_sink(cfg, "green", out, seed_offset, timings)
    study = sup_norm_study(cfg.dimension, cfg.scales, cfg.solver_tol)
    sink.add_rows(ResultRow(cfg.name, cfg.dimension, p.scale, 0,
                            "kernel-sup-norm", p.value, 0.0)
                  for p in study.series.points)
    center = (0,) * cfg.dimension
    for L in cfg.scales:
        box = make_box(cfg.dimension, center, L)
        kernel = build_kernel(box, tol=cfg.solver_tol)
        for i in sink.seeds():
            phi = sample_field("standard-gaussian", box,
                               SeededStream(cfg.master_seed, f"field#{i}"))
            sink.add_rows([ResultRow(cfg.name, cfg.dimension, L, i,
                                     "identity-residual",
                                     kernel.residual(phi), 0.0)])
    sink.add_series(_series_entry("kernel-sup-norm", study.series,
                                  bounded=study.bounded))
    sink.flush()
    return study.series


def run_dlr_check(cfg: ExperimentConfig, out: str | None = None,
                  threads: int = 1, seed_offset: int = 0,
                  timings: bool = False) -> list:
    """Direct vs boundary-resampled estimates of the center height."""
    sink = _open_sink(cfg, "dlr", out, seed_offset, timings)
    potential = cfg.potential()
    center = (0,) * cfg.dimension
    L = max(cfg.scales)
    if cfg.inner_scale >= L:
        raise ValueError("inner scale must be smaller than the box scale")
    big = make_box(cfg.dimension, center, L)
    inner = make_box(cfg.dimension, center, cfg.inner_scale)
    if cfg.total_time <= 0.0:
        raise ValueError("dlr runs need [dynamics] total_time > 0")
    dyn = LangevinConfig(
        dt=cfg.dt or stability_limit(cfg.dimension, potential),
        total_time=cfg.total_time, burn_in=cfg.burn_in, lam=cfg.intensity,
        potential=potential, stride=cfg.stride)
    observable = LocalObservable(sites=(center,), fn=lambda v: float(v[0]))

    checks = []
    for i in sink.seeds():
        eta = sample_field(cfg.law, big,
                           SeededStream(cfg.master_seed, f"disorder#{i}"))
        check = dlr_resample_check(big, inner, eta, dyn, observable,
                                   SeededStream(cfg.master_seed, f"dlr#{i}"),
                                   cfg.n_resamples)
        checks.append(check)
        sink.add_rows([
            ResultRow(cfg.name, cfg.dimension, L, i, "dlr-direct",
                      check.direct, check.direct_stderr),
            ResultRow(cfg.name, cfg.dimension, L, i, "dlr-resampled",
                      check.resampled, check.resampled_stderr),
            ResultRow(cfg.name, cfg.dimension, L, i, "dlr-discrepancy",
                      check.discrepancy, check.pooled_stderr),
        ])
    sink.flush()
    return checks
