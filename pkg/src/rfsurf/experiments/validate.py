"""Cross-module consistency suite with a machine-readable verdict.

Five fast checks bind the samplers to the exact Gaussian oracle and to
each other on small quadratic instances: ground state against the
linear solve, Langevin time averages against the stationary mean and
variance, the representation-kernel identity, the DLR resampling
consistency, and bitwise shift covariance.  Each check reports the
observed statistic and its acceptance band; the report is written as
``validation.json``.

The config's knobs double as designed failure injectors: ``dt_scale``
above 1 pushes the dynamics past its stability bound (the stationarity
check must then fail, whether by rejection or by divergence), and a
loosened ``[tolerances] solver`` degrades the kernel solve until the
identity check fails.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..disorder import SeededStream, sample_field
from ..gaussian_oracle import green_diagonal, mean_field
from ..green import build_kernel
from ..ground_state import solve
from ..langevin import (LangevinConfig, LocalObservable, dlr_resample_check,
                        simulate, stability_limit)
from ..lattice import make_box
from ..observables import batch_means_stderr, shift_covariance_check
from ..potentials import Quadratic
from .config import ExperimentConfig

__all__ = ["run_validation_suite"]


def _check(name: str, passed: bool, observed, expected: str,
           detail: str = "") -> dict:
    entry = {"name": name, "passed": bool(passed),
             "observed": observed, "expected": expected}
    if detail:
        entry["detail"] = detail
    return entry


def _ground_state_check(cfg: ExperimentConfig) -> dict:
    box = make_box(2, (0, 0), 6)
    eta = sample_field("standard-gaussian", box,
                       SeededStream(cfg.master_seed, "disorder#0"))
    lam = cfg.intensity
    v = solve(box, eta, lam, Quadratic(), tol=cfg.solver_tol).field
    oracle = mean_field(box, eta, lam, tol=min(cfg.solver_tol, 1e-11))
    gap = float(np.abs(v.data - oracle.data).max())
    bound = cfg.identity_tol * max(1.0, float(np.abs(oracle.data).max()))
    return _check("ground-state-oracle", gap <= bound, gap,
                  f"<= {bound:.3g}")


def _stationarity_check(cfg: ExperimentConfig) -> dict:
    box = make_box(2, (0, 0), 4)
    eta = sample_field("standard-gaussian", box,
                       SeededStream(cfg.master_seed, "disorder#0"))
    dt = cfg.dt_scale * stability_limit(2, Quadratic())
    try:
        dyn = LangevinConfig(dt=dt, total_time=500.0, burn_in=50.0,
                             lam=cfg.intensity)
        traj = simulate(box, eta, dyn,
                        SeededStream(cfg.master_seed, "dynamics#0"))
    except ValueError as err:
        return _check("langevin-stationarity", False, str(err),
                      "mean and variance within 3 standard errors",
                      detail="config rejected before sampling")
    center = box.local_index(box.center)
    series = traj.center_series
    mean_dev = abs(traj.mean.data[center]
                   - mean_field(box, eta, cfg.intensity).data[center])
    mean_se = batch_means_stderr(series)
    var_dev = abs(traj.variance().data[center]
                  - green_diagonal(box, box.center))
    var_se = batch_means_stderr((series - series.mean()) ** 2)
    ok = mean_dev <= 3.0 * mean_se and var_dev <= 3.0 * var_se
    return _check("langevin-stationarity", ok,
                  {"mean_dev_se": float(mean_dev / mean_se),
                   "var_dev_se": float(var_dev / var_se)},
                  "mean and variance within 3 standard errors")


def _green_identity_check(cfg: ExperimentConfig) -> dict:
    box = make_box(2, (0, 0), 3)
    kernel = build_kernel(box, tol=cfg.solver_tol)
    worst = 0.0
    for i in range(5):
        phi = sample_field("standard-gaussian", box,
                           SeededStream(cfg.master_seed, f"field#{i}"))
        worst = max(worst, float(abs(kernel.residual(phi))))
    return _check("green-identity", worst <= cfg.identity_tol, worst,
                  f"<= {cfg.identity_tol:.3g}")


def _dlr_check(cfg: ExperimentConfig) -> dict:
    big = make_box(2, (0, 0), 6)
    inner = make_box(2, (0, 0), 2)
    eta = sample_field("standard-gaussian", big,
                       SeededStream(cfg.master_seed, "disorder#0"))
    dyn = LangevinConfig(dt=stability_limit(2, Quadratic()),
                         total_time=400.0, burn_in=50.0, lam=cfg.intensity)
    observable = LocalObservable(sites=((0, 0),), fn=lambda v: float(v[0]))
    check = dlr_resample_check(big, inner, eta, dyn, observable,
                               SeededStream(cfg.master_seed, "dlr#0"),
                               n_resamples=8)
    ratio = float(abs(check.discrepancy) / check.pooled_stderr)
    return _check("dlr-consistency", ratio <= 3.0, ratio,
                  "<= 3 pooled standard errors")


def _shift_check(cfg: ExperimentConfig) -> dict:
    box = make_box(2, (0, 0), 3)
    eta = sample_field("standard-gaussian", box,
                       SeededStream(cfg.master_seed, "disorder#0"))
    dyn = LangevinConfig(dt=stability_limit(2, Quadratic()),
                         total_time=4.0, lam=cfg.intensity, stride=8)
    gap = float(shift_covariance_check(box, (1, 0), eta, dyn,
                                       cfg.master_seed))
    return _check("shift-covariance", gap == 0.0, gap, "== 0 bitwise")


def run_validation_suite(cfg: ExperimentConfig, out: str | None = None,
                         threads: int = 1, seed_offset: int = 0,
                         timings: bool = False) -> dict:
    """Run all five checks and persist the verdict; returns the report."""
    checks = [
        _ground_state_check(cfg),
        _stationarity_check(cfg),
        _green_identity_check(cfg),
        _dlr_check(cfg),
        _shift_check(cfg),
    ]
    report = {
        "schema_version": 1,
        "experiment": cfg.name,
        "all_passed": all(c["passed"] for c in checks),
        "checks": checks,
    }
    out_dir = Path(out) if out else Path(cfg.out_dir())
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "validation.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return report
