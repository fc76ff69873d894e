"""Read-only access to one experiment output directory.

The simulation side writes a fixed trio per run: ``results.csv`` with
one row per (scale, seed, statistic) cell, ``manifest.json`` with the
config echo and seed table, and ``series.json`` with the per-statistic
scale series and any fits attached to them.  This module parses that
contract and nothing else: the column set is closed, schema versions
must match, and fits are taken verbatim.  Nothing here recomputes a
fit; the series file is the single source of truth for exponents.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

__all__ = [
    "CSV_COLUMNS",
    "PlotDataError",
    "Point",
    "ResultRow",
    "Series",
    "SeriesFile",
    "load_series_file",
]

CSV_COLUMNS = ("experiment", "d", "L", "seed", "statistic", "value",
               "stderr", "walltime_s")
SCHEMA_VERSION = 1


class PlotDataError(ValueError):
    """Input files are missing, malformed, or from an unknown schema."""


@dataclasses.dataclass(frozen=True)
class Point:
    scale: int
    value: float
    stderr: float


@dataclasses.dataclass(frozen=True)
class ResultRow:
    d: int
    scale: int
    seed: int
    statistic: str
    value: float
    stderr: float


@dataclasses.dataclass(frozen=True)
class Series:
    """One statistic across scales, with the fits exactly as stored."""

    statistic: str
    points: tuple[Point, ...]
    fits: dict[str, dict[str, float]]

    def scales(self) -> list[int]:
        return [p.scale for p in self.points]

    def values(self) -> list[float]:
        return [p.value for p in self.points]

    def stderrs(self) -> list[float]:
        return [p.stderr for p in self.points]


@dataclasses.dataclass(frozen=True)
class SeriesFile:
    """Parsed contents of one experiment directory."""

    directory: Path
    experiment: str
    config_sha256: str
    seeds: tuple[int, ...]
    rows: tuple[ResultRow, ...]
    series: dict[str, Series]

    def statistics(self) -> list[str]:
        named = set(self.series)
        named.update(row.statistic for row in self.rows)
        return sorted(named)

    def rows_for(self, statistic: str) -> list[ResultRow]:
        return [r for r in self.rows if r.statistic == statistic]


def _require(path: Path) -> Path:
    if not path.is_file():
        raise PlotDataError(f"missing {path.name} in {path.parent}")
    return path


def _load_json(path: Path) -> dict:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise PlotDataError(f"{path.name} is not valid JSON: {err}") from err
    if not isinstance(payload, dict):
        raise PlotDataError(f"{path.name} must hold a JSON object")
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise PlotDataError(
            f"{path.name} has schema version {version!r}, "
            f"expected {SCHEMA_VERSION}")
    return payload


def _load_rows(path: Path) -> tuple[ResultRow, ...]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise PlotDataError(f"{path} is empty")
        if tuple(header) != CSV_COLUMNS:
            raise PlotDataError(
                f"unexpected columns {header} in {path.name}; "
                f"this reader understands exactly {list(CSV_COLUMNS)}")
        rows = []
        for record in reader:
            rows.append(ResultRow(
                d=int(record[1]), scale=int(record[2]),
                seed=int(record[3]), statistic=record[4],
                value=float(record[5]), stderr=float(record[6])))
    return tuple(rows)


def _load_series(path: Path) -> dict[str, Series]:
    if not path.is_file():
        # Some experiments (the DLR check) measure at one scale only and
        # publish no series; the report then plots the rows directly.
        return {}
    payload = _load_json(path)
    series: dict[str, Series] = {}
    for entry in payload.get("series", []):
        points = tuple(Point(int(p["scale"]), float(p["value"]),
                             float(p["stderr"]))
                       for p in entry["points"])
        fits = {name: {k: float(v) for k, v in fit.items()}
                for name, fit in entry.get("fits", {}).items()}
        series[entry["statistic"]] = Series(
            statistic=entry["statistic"], points=points, fits=fits)
    return series


def load_series_file(directory: str | Path) -> SeriesFile:
    """Parse one experiment directory; raises PlotDataError when off-contract."""
    directory = Path(directory)
    if not directory.is_dir():
        raise PlotDataError(f"{directory} is not a directory")
    manifest = _load_json(_require(directory / "manifest.json"))
    rows = _load_rows(_require(directory / "results.csv"))
    return SeriesFile(
        directory=directory,
        experiment=str(manifest.get("experiment", directory.name)),
        config_sha256=str(manifest.get("config_sha256", "")),
        seeds=tuple(int(s) for s in manifest.get("seeds", [])),
        rows=rows,
        series=_load_series(directory / "series.json"),
    )
