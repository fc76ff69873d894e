"""Experiment configuration: a validated, diff-friendly TOML schema.

One file describes one experiment.  Sections and keys are closed sets:
anything unrecognized is an error, so a typo cannot silently fall back
to a default.  The raw file text is kept verbatim for the manifest, so
a run can always be reproduced from its output directory alone.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from ..disorder import LAWS
from ..potentials import Potential, make_potential

__all__ = ["ExperimentConfig", "load_config"]

_FAMILIES = ("quadratic", "quadratic_cosine")


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Validated contents of one experiment file.

    ``dt = 0`` means the stability limit of (dimension, potential);
    ``total_time = 0`` means the per-scale default of the runner (the
    coupling runner uses L^2).  ``raw_text`` is the config file exactly
    as read, echoed into the manifest.
    """

    name: str
    dimension: int
    scales: tuple[int, ...]
    family: str = "quadratic"
    kappa: float | None = None
    law: str = "standard-gaussian"
    intensity: float = 1.0
    n_seeds: int = 1
    master_seed: int = 0
    dt: float = 0.0
    total_time: float = 0.0
    burn_in: float = 0.0
    stride: int = 0
    solver_tol: float = 1e-10
    identity_tol: float = 1e-9
    n_resamples: int = 16
    inner_scale: int = 2
    dt_scale: float = 1.0
    output_dir: str = ""
    raw_text: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("experiment name must be nonempty")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if not self.scales:
            raise ValueError("need at least one scale")
        if any(s < 1 for s in self.scales):
            raise ValueError("scales must be positive")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ValueError("scales must be strictly increasing")
        if self.family not in _FAMILIES:
            raise ValueError(f"potential family must be one of {_FAMILIES}")
        if self.law not in LAWS:
            raise ValueError(f"disorder law must be one of {LAWS}")
        if self.n_seeds < 1:
            raise ValueError("seed count must be positive")
        if self.dt < 0.0 or self.total_time < 0.0 or self.burn_in < 0.0:
            raise ValueError("dynamics durations must be nonnegative")
        if self.stride < 0:
            raise ValueError("stride must be nonnegative")
        if self.solver_tol <= 0.0 or self.identity_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.n_resamples < 1:
            raise ValueError("resample count must be positive")
        if self.inner_scale < 1:
            raise ValueError("inner scale must be positive")
        if self.dt_scale <= 0.0:
            raise ValueError("dt_scale must be positive")

    def potential(self) -> Potential:
        return make_potential(self.family, self.kappa)

    def out_dir(self) -> str:
        return self.output_dir or f"runs/{self.name}"


# section -> key -> (config field, expected type); bool before int matters
# nowhere here because the schema has no boolean keys
_SCHEMA: dict[str, dict[str, tuple[str, type]]] = {
    "experiment": {
        "name": ("name", str),
        "dimension": ("dimension", int),
        "scales": ("scales", list),
    },
    "potential": {
        "family": ("family", str),
        "kappa": ("kappa", float),
    },
    "disorder": {
        "law": ("law", str),
        "intensity": ("intensity", float),
        "seeds": ("n_seeds", int),
        "master_seed": ("master_seed", int),
    },
    "dynamics": {
        "dt": ("dt", float),
        "total_time": ("total_time", float),
        "burn_in": ("burn_in", float),
        "stride": ("stride", int),
    },
    "tolerances": {
        "solver": ("solver_tol", float),
        "identity": ("identity_tol", float),
    },
    "dlr": {
        "resamples": ("n_resamples", int),
        "inner_scale": ("inner_scale", int),
    },
    "validation": {
        "dt_scale": ("dt_scale", float),
    },
    "output": {
        "directory": ("output_dir", str),
    },
}


def _coerce(section: str, key: str, value, expected: type):
    if expected is float and isinstance(value, int) \
            and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, expected) or isinstance(value, bool):
        raise ValueError(
            f"[{section}] {key} must be {expected.__name__}, "
            f"got {type(value).__name__}")
    return value


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate one experiment file; unknown keys are errors."""
    raw = Path(path).read_text(encoding="utf-8")
    data = tomllib.loads(raw)

    fields: dict[str, object] = {"raw_text": raw}
    for section, table in data.items():
        known = _SCHEMA.get(section)
        if known is None:
            raise ValueError(f"unknown config section [{section}]")
        if not isinstance(table, dict):
            raise ValueError(f"[{section}] must be a table")
        for key, value in table.items():
            if key not in known:
                raise ValueError(f"unknown key {key!r} in [{section}]")
            field, expected = known[key]
            fields[field] = _coerce(section, key, value, expected)

    if "scales" in fields:
        scales = fields["scales"]
        if not all(isinstance(s, int) and not isinstance(s, bool)
                   for s in scales):
            raise ValueError("[experiment] scales must be integers")
        fields["scales"] = tuple(scales)
    missing = [k for k in ("name", "dimension", "scales") if k not in fields]
    if missing:
        raise ValueError(f"[experiment] missing required keys: {missing}")
    return ExperimentConfig(**fields)  # type: ignore[arg-type]
