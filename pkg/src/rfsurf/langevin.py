"""Euler-Maruyama sampling of the pinned-surface Gibbs measure.

The dynamics evolves interior heights by

    phi'(x) = phi(x) + dt * [ sum_{y ~ x} V'(phi(y) - phi(x)) + lam * eta(x) ]
                    + sqrt(2 dt) * xi(x),

with boundary values held at the configured field and xi independent
standard gaussians drawn from the counter-based stream: the increment at
site x and step k depends only on (seed, purpose, absolute coordinate of
x, k).  Two chains sharing a purpose therefore receive bitwise identical
increments wherever their boxes overlap, which is the whole coupling
mechanism: no synchronization is needed beyond agreeing on purposes.

Purpose layout.  ``simulate`` consumes the stream it is given.
``coupled_simulate`` derives three purposes from its stream, suffixing
``/init0`` and ``/init1`` for the independent pre-equilibration of the
two marginals and ``/noise`` for the shared coupled phase.
``dlr_resample_check`` suffixes ``/big`` and ``/resample<j>``.

Time averages use transition midpoints (phi_k + phi_{k+1}) / 2 rather
than endpoints.  For the quadratic potential the midpoint chain has
exactly the stationary mean and covariance of the target Gaussian at any
stable dt, removing the O(dt) variance inflation of the endpoint chain;
see the discretization oracle in ``gaussian_oracle`` for the endpoint
law.  Snapshots, by contrast, are genuine states of the chain.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from ._numerics import ConvergenceError
from .disorder import SeededStream
from .ground_state import equation_residual
from .lattice import (Box, VertexField, forward_differences, make_box,
                      window_slices)
from .observables import batch_means_stderr
from .potentials import Potential, Quadratic

__all__ = [
    "CoupledPair",
    "DlrCheck",
    "LangevinConfig",
    "LocalObservable",
    "Trajectory",
    "coupled_simulate",
    "dlr_resample_check",
    "simulate",
    "stability_limit",
    "step",
]


def stability_limit(dim: int, potential: Potential) -> float:
    """Largest admissible time step, 1 / (4 d c_plus)."""
    return 1.0 / (4.0 * dim * potential.c_plus)


@dataclasses.dataclass
class LangevinConfig:
    """Parameters of one Euler-Maruyama run.

    ``total_time`` and ``burn_in`` are in time units; step counts are
    their rounded multiples of ``dt``.  ``stride`` > 0 records a
    snapshot every that many steps (the initial state and the final
    state are always recorded).  ``boundary`` pins the boundary ring;
    ``None`` means zero.
    """

    dt: float
    total_time: float
    burn_in: float = 0.0
    lam: float = 0.0
    potential: Potential = dataclasses.field(default_factory=Quadratic)
    boundary: VertexField | None = None
    stride: int = 0

    def validate(self, dim: int) -> None:
        limit = stability_limit(dim, self.potential)
        if not 0.0 < self.dt <= limit + 1e-15:
            raise ValueError(
                f"dt = {self.dt} outside (0, {limit:.6g}] for d = {dim}")
        if self.burn_in < 0.0 or self.burn_in >= self.total_time:
            raise ValueError("burn-in must satisfy 0 <= burn_in < total_time")
        if self.stride < 0:
            raise ValueError("stride must be nonnegative")

    def n_steps(self) -> int:
        return max(1, int(round(self.total_time / self.dt)))

    def n_burn(self) -> int:
        return int(round(self.burn_in / self.dt))


def step(phi: VertexField, eta: VertexField, cfg: LangevinConfig,
         noise: VertexField | None = None) -> VertexField:
    """One explicit update; ``noise`` holds standard gaussians (None = 0).

    Reference implementation used by tests and single-step callers; the
    long-run path in ``simulate`` performs the same arithmetic on
    preallocated buffers.
    """
    box = phi.box
    cfg.validate(box.dim)
    drift = equation_residual(phi, eta, cfg.lam, cfg.potential)
    out = phi.data.copy()
    interior = box.interior_mask
    out[interior] += cfg.dt * drift.data[interior]
    if noise is not None:
        out[interior] += math.sqrt(2.0 * cfg.dt) * noise.data[interior]
    boundary = box.boundary_mask
    if cfg.boundary is not None:
        out[boundary] = cfg.boundary.data[boundary]
    else:
        out[boundary] = 0.0
    return VertexField(box, out)


class _Chain:
    """State and buffers of one chain; steps are driven by draw index."""

    def __init__(self, box: Box, eta: VertexField, cfg: LangevinConfig,
                 stream: SeededStream):
        cfg.validate(box.dim)
        self.box = box
        self.cfg = cfg
        self.dt = cfg.dt
        self.noise_scale = math.sqrt(2.0 * cfg.dt)
        self.potential = cfg.potential
        # The two built-in families get the fused in-place V' transform;
        # anything else goes through the potential's vectorized prime.
        if cfg.potential.family == "quadratic":
            self.kappa = 0.0
        else:
            self.kappa = getattr(cfg.potential, "kappa", None)

        shape = box.shape
        cube = np.zeros(shape, dtype=np.float64)
        if cfg.boundary is not None:
            np.copyto(cube, cfg.boundary.data, where=box.boundary_mask)
        self.phi = cube
        self.prev = cube.copy()
        self._out = cube.copy()
        self.flux = np.zeros((box.dim, cube.size), dtype=np.float64)
        self.idx = np.flatnonzero(box.interior_mask.ravel())
        self.eta_int = eta.data.ravel()[self.idx].copy()
        self.keys_int = stream.site_keys(box).ravel()[self.idx].copy()
        self.strides = np.array(
            [int(np.prod(shape[a + 1:], dtype=np.int64))
             for a in range(box.dim)], dtype=np.int64)
        n_int = self.idx.size
        self._u = np.empty(n_int, dtype=np.float64)
        self._z = np.empty(n_int, dtype=np.float64)
        self.acc1 = np.zeros(n_int, dtype=np.float64)
        self.acc2 = np.zeros(n_int, dtype=np.float64)
        self.n_acc = 0

    def rekey(self, stream: SeededStream) -> None:
        self.keys_int = stream.site_keys(self.box).ravel()[self.idx].copy()

    def advance(self, draw: int, accumulate: bool) -> None:
        phi_flat = self.phi.reshape(-1)
        if self.kappa is None:
            _kernels.gradient_flux(phi_flat, self.flux, self.strides, 0.0)
            self.flux[...] = self.potential.prime(self.flux)
        else:
            _kernels.gradient_flux(phi_flat, self.flux, self.strides,
                                   self.kappa)
        _kernels.euler_step(
            phi_flat, self._out.reshape(-1), self.flux, self.eta_int,
            self.keys_int, self.idx, self.strides, np.uint64(draw),
            self.dt, self.cfg.lam, self.noise_scale, self._u, self._z,
            self.acc1, self.acc2, np.int64(1 if accumulate else 0))
        if accumulate:
            self.n_acc += 1
        self.prev, self.phi, self._out = self.phi, self._out, self.prev

    def midpoint_at(self, flat_index: int) -> float:
        return 0.5 * (self.prev.reshape(-1)[flat_index]
                      + self.phi.reshape(-1)[flat_index])

    def midpoint_cube(self) -> np.ndarray:
        return 0.5 * (self.prev + self.phi)

    def check_finite(self) -> None:
        if not np.isfinite(self.phi).all():
            raise ConvergenceError(
                "dynamics overflowed; the time step violates stability")

    def moments(self) -> tuple[VertexField, VertexField]:
        if self.n_acc == 0:
            raise ValueError("no accumulated samples")
        m1 = np.zeros(self.phi.size, dtype=np.float64)
        m2 = np.zeros(self.phi.size, dtype=np.float64)
        m1[self.idx] = self.acc1 / self.n_acc
        m2[self.idx] = self.acc2 / self.n_acc
        shape = self.box.shape
        return (VertexField(self.box, m1.reshape(shape)),
                VertexField(self.box, m2.reshape(shape)))


@dataclasses.dataclass
class Trajectory:
    """Output of one chain: snapshots plus midpoint time averages."""

    box: Box
    times: np.ndarray
    snapshots: np.ndarray
    mean: VertexField
    second_moment: VertexField
    n_samples: int
    center_series: np.ndarray
    observable_series: np.ndarray | None
    final: VertexField

    def variance(self) -> VertexField:
        return VertexField(self.box,
                           self.second_moment.data - self.mean.data ** 2)


def simulate(box: Box, eta: VertexField, cfg: LangevinConfig,
             stream: SeededStream,
             observable: Callable[[np.ndarray], float] | None = None,
             ) -> Trajectory:
    """Run the chain from zero interior heights and time-average it.

    Accumulators and the per-step series cover the transitions after
    burn-in; ``observable`` (a function of the state cube) is evaluated
    on transition midpoints.  Snapshots are recorded per ``cfg.stride``.
    """
    if eta.box != box:
        raise ValueError("disorder must live on the simulated box")
    chain = _Chain(box, eta, cfg, stream)
    n_steps = cfg.n_steps()
    n_burn = min(cfg.n_burn(), n_steps - 1)
    center_flat = int(np.ravel_multi_index(box.local_index(box.center),
                                           box.shape))

    times = [0.0]
    snaps = [chain.phi.copy()]
    center_series = np.empty(n_steps - n_burn, dtype=np.float64)
    obs_series = (np.empty(n_steps - n_burn, dtype=np.float64)
                  if observable is not None else None)

    for k in range(n_steps):
        accumulate = k >= n_burn
        chain.advance(k, accumulate)
        if accumulate:
            center_series[k - n_burn] = chain.midpoint_at(center_flat)
            if observable is not None:
                obs_series[k - n_burn] = observable(chain.midpoint_cube())
        if (cfg.stride > 0 and (k + 1) % cfg.stride == 0) or k + 1 == n_steps:
            chain.check_finite()
            if not times or times[-1] != (k + 1) * cfg.dt:
                times.append((k + 1) * cfg.dt)
                snaps.append(chain.phi.copy())

    mean, second = chain.moments()
    return Trajectory(
        box=box,
        times=np.array(times, dtype=np.float64),
        snapshots=np.array(snaps),
        mean=mean,
        second_moment=second,
        n_samples=chain.n_acc,
        center_series=center_series,
        observable_series=obs_series,
        final=VertexField(box, chain.phi.copy()),
    )


def _nested_inner(box0: Box, box1: Box) -> Box:
    """The smaller of two nested boxes; errors when neither contains the
    other's closed interior."""
    small, large = (box0, box1) if box0.radius <= box1.radius else (box1, box0)
    margin = large.radius - small.radius
    if any(abs(cs - cl) > margin
           for cs, cl in zip(small.center, large.center)):
        raise ValueError("coupled boxes must be nested")
    return small


@dataclasses.dataclass
class CoupledPair:
    """Result of evolving two boxes with shared noise.

    ``w_snapshots`` holds the difference field on the inner box cube at
    the recorded coupled times.  Environment statistics are evaluated on
    the inner box's internal edges through the curvature average of the
    potential, so for the quadratic family they are identically one.
    """

    box0: Box
    box1: Box
    inner: Box
    window: Box
    final0: VertexField
    final1: VertexField
    sup_gradient: float
    height_difference: float
    average_difference: float
    times: np.ndarray
    w_snapshots: np.ndarray
    env_series: np.ndarray
    env_min: float
    env_max: float


def coupled_simulate(box0: Box, box1: Box, eta: VertexField,
                     cfg: LangevinConfig, stream: SeededStream,
                     pre_time: float | None = None) -> CoupledPair:
    """Shared-noise coupling of the two boxes' dynamics.

    Each marginal is first equilibrated independently from zero initial
    heights under its own noise purpose for ``pre_time`` (default:
    ``cfg.burn_in`` when positive, else max(L^2, 20 / c_minus) with L
    the inner radius), then both run for ``cfg.total_time`` under a
    common purpose, so increments agree bitwise at shared coordinates.
    The comparison statistic is the sup gradient discrepancy over the
    half-radius window at the final time.  ``cfg.boundary`` must be
    unset: both chains are pinned at zero.
    """
    if cfg.boundary is not None:
        raise ValueError("coupled runs pin both boundaries at zero")
    inner = _nested_inner(box0, box1)
    L = inner.radius
    if L < 2:
        raise ValueError("inner box too small to carry the statistic")
    window = make_box(inner.dim, inner.center, L // 2)
    height_window = make_box(inner.dim, inner.center, max(1, L // 4))
    if pre_time is None:
        if cfg.burn_in > 0.0:
            pre_time = cfg.burn_in
        else:
            pre_time = max(float(L * L), 20.0 / cfg.potential.c_minus)

    def restricted(box: Box) -> VertexField:
        out = VertexField(box)
        np.copyto(out.data, eta.data[window_slices(box, eta.box)],
                  where=box.plus_mask)
        return out

    run_cfg = dataclasses.replace(cfg, boundary=None, burn_in=0.0)
    chains = []
    for tag, box in (("/init0", box0), ("/init1", box1)):
        chain = _Chain(box, restricted(box), run_cfg,
                       stream.with_purpose(stream.purpose + tag))
        n_pre = int(round(pre_time / cfg.dt))
        for k in range(n_pre):
            chain.advance(k, False)
        chain.check_finite()
        chains.append(chain)

    # Re-key both chains to the shared purpose for the coupled phase.
    shared = stream.with_purpose(stream.purpose + "/noise")
    for chain in chains:
        chain.rekey(shared)

    n_steps = cfg.n_steps()
    stride = cfg.stride if cfg.stride > 0 else max(1, n_steps // 64)
    slices0 = window_slices(inner, box0)
    slices1 = window_slices(inner, box1)
    env_mask = inner.edge_mask("interior")

    def record(times, snaps, envs, t):
        w = chains[0].phi[slices0] - chains[1].phi[slices1]
        g0 = forward_differences(chains[0].phi[slices0])
        g1 = forward_differences(chains[1].phi[slices1])
        env = cfg.potential.averaged_environment(g0[env_mask], g1[env_mask])
        times.append(t)
        snaps.append(w)
        envs.append((float(env.min()), float(env.max())))

    times: list[float] = []
    snaps: list[np.ndarray] = []
    envs: list[tuple[float, float]] = []
    record(times, snaps, envs, 0.0)
    for k in range(n_steps):
        chains[0].advance(k, False)
        chains[1].advance(k, False)
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            chains[0].check_finite()
            chains[1].check_finite()
            if times[-1] != (k + 1) * cfg.dt:
                record(times, snaps, envs, (k + 1) * cfg.dt)

    final0 = VertexField(box0, chains[0].phi.copy())
    final1 = VertexField(box1, chains[1].phi.copy())
    from .observables import spatial_average, sup_gradient_difference
    sup_grad = sup_gradient_difference(final0, final1, window)
    height_diff = abs(final0[inner.center] - final1[inner.center])
    avg_diff = abs(spatial_average(final0, height_window)
                   - spatial_average(final1, height_window))
    env_series = np.array(envs, dtype=np.float64)
    return CoupledPair(
        box0=box0, box1=box1, inner=inner, window=window,
        final0=final0, final1=final1,
        sup_gradient=sup_grad,
        height_difference=height_diff,
        average_difference=avg_diff,
        times=np.array(times, dtype=np.float64),
        w_snapshots=np.array(snaps),
        env_series=env_series,
        env_min=float(env_series[:, 0].min()),
        env_max=float(env_series[:, 1].max()),
    )


@dataclasses.dataclass(frozen=True)
class LocalObservable:
    """A function of finitely many sites, with declared support."""

    sites: tuple[tuple[int, ...], ...]
    fn: Callable[[np.ndarray], float]

    def evaluator(self, box: Box) -> Callable[[np.ndarray], float]:
        for x in self.sites:
            if not box.contains(x):
                raise ValueError(f"observable support {x} outside the box")
        flat = np.array([np.ravel_multi_index(box.local_index(x), box.shape)
                         for x in self.sites], dtype=np.int64)
        fn = self.fn
        return lambda cube: float(fn(cube.reshape(-1)[flat]))


@dataclasses.dataclass(frozen=True)
class DlrCheck:
    """Direct and boundary-resampled estimates of a local observable."""

    direct: float
    direct_stderr: float
    resampled: float
    resampled_stderr: float

    @property
    def pooled_stderr(self) -> float:
        return math.sqrt(self.direct_stderr ** 2 + self.resampled_stderr ** 2)

    @property
    def discrepancy(self) -> float:
        return abs(self.direct - self.resampled)


def dlr_resample_check(big_box: Box, inner_box: Box, eta: VertexField,
                       cfg: LangevinConfig, observable: LocalObservable,
                       stream: SeededStream, n_resamples: int = 16,
                       inner_cfg: LangevinConfig | None = None) -> DlrCheck:
    """Consistency of the big-box law with boundary-resampled inner runs.

    Estimates the thermal mean of the observable directly on the big box,
    then again by freezing inner-box boundary values from spaced big-box
    snapshots and averaging fresh inner-box chains with those boundary
    conditions.  Both estimates carry their own standard errors; for a
    Gibbs measure the two agree up to sampling noise.
    """
    for a in range(big_box.dim):
        if (abs(inner_box.center[a] - big_box.center[a])
                + inner_box.radius + 1 > big_box.radius):
            raise ValueError("inner box plus boundary must sit inside the "
                             "big box interior")
    if eta.box != big_box:
        raise ValueError("disorder must live on the big box")

    # Direct estimate from one long chain, snapshots spaced for resampling.
    n_steps = cfg.n_steps()
    n_burn = min(cfg.n_burn(), n_steps - 1)
    gap = max(1, (n_steps - n_burn) // n_resamples)
    big_cfg = dataclasses.replace(cfg, stride=0)
    fn_big = observable.evaluator(big_box)
    resample_steps = [n_burn + (j + 1) * gap - 1 for j in range(n_resamples)]
    resample_steps = [min(s, n_steps - 1) for s in resample_steps]

    chain = _Chain(big_box, eta, big_cfg,
                   stream.with_purpose(stream.purpose + "/big"))
    series = np.empty(n_steps - n_burn, dtype=np.float64)
    boundaries: list[np.ndarray] = []
    targets = set(resample_steps)
    for k in range(n_steps):
        chain.advance(k, k >= n_burn)
        if k >= n_burn:
            series[k - n_burn] = fn_big(chain.midpoint_cube())
        if k in targets:
            boundaries.append(chain.phi[window_slices(inner_box, big_box)]
                              .copy())
    chain.check_finite()
    direct = float(series.mean())
    direct_stderr = batch_means_stderr(series)

    if inner_cfg is None:
        inner_cfg = dataclasses.replace(cfg, stride=0)
    eta_inner = VertexField(inner_box)
    np.copyto(eta_inner.data, eta.data[window_slices(inner_box, big_box)],
              where=inner_box.plus_mask)
    fn_inner = observable.evaluator(inner_box)

    estimates = np.empty(len(boundaries), dtype=np.float64)
    for j, values in enumerate(boundaries):
        psi = VertexField(inner_box)
        np.copyto(psi.data, values, where=inner_box.boundary_mask)
        run = dataclasses.replace(inner_cfg, boundary=psi)
        traj = simulate(inner_box, eta_inner, run,
                        stream.with_purpose(f"{stream.purpose}/resample{j}"),
                        observable=fn_inner)
        estimates[j] = float(traj.observable_series.mean())
    resampled = float(estimates.mean())
    resampled_stderr = float(estimates.std(ddof=1)
                             / math.sqrt(len(estimates)))
    return DlrCheck(direct=direct, direct_stderr=direct_stderr,
                    resampled=resampled, resampled_stderr=resampled_stderr)
