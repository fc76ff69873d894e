"""Measured quantities: weighted norms, coupling statistics, scaling fits.

Summary statistics live here so that solvers and samplers stay free of
analysis code.  The exponentially weighted norm

    |phi|_1 = ( sum_x phi(x)^2 exp(-|x|) )^(1/2)

uses the Euclidean length of the absolute coordinate, so it is invariant
under relabeling a field to a different box and contracts by at most
exp(|y|/2) under a shift by y.  Fields are extended by zero outside their
box, which makes the truncated sum exact.

Scaling data is collected into ``ScalingSeries`` objects, lists of
(scale, value, standard error) triples, and summarized by weighted least
squares in log-log coordinates (``fit_power_law``) or in lin-log
coordinates (``fit_log_growth``).  Fit weights are 1/stderr^2 with a
floor of 1e-6 on the standard error so that exact series do not
degenerate.
"""

from __future__ import annotations

import dataclasses
import math
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .lattice import (Box, EdgeField, VertexField, forward_differences,
                      make_box, window_slices)

if TYPE_CHECKING:
    from .green import RepresentationKernel

__all__ = [
    "PowerLawFit",
    "LogGrowthFit",
    "SeriesPoint",
    "ScalingSeries",
    "ReconstructionSplit",
    "RegularityDiagnostics",
    "VarianceDecomposition",
    "batch_means_stderr",
    "empirical_wasserstein_upper",
    "fit_log_growth",
    "fit_power_law",
    "height_reconstruction_error",
    "oscillation",
    "regularity_diagnostics",
    "shift_covariance_check",
    "spatial_average",
    "sup_gradient_difference",
    "variance_decomposition",
    "weighted_norm",
]

STDERR_FLOOR = 1e-6


@dataclasses.dataclass(frozen=True)
class SeriesPoint:
    scale: int
    value: float
    stderr: float


@dataclasses.dataclass(frozen=True)
class PowerLawFit:
    """Result of fitting value = prefactor * scale^(-exponent)."""

    exponent: float
    prefactor: float
    r_squared: float


@dataclasses.dataclass(frozen=True)
class LogGrowthFit:
    """Result of fitting value = offset + slope * ln(scale)."""

    offset: float
    slope: float
    r_squared: float


@dataclasses.dataclass
class ScalingSeries:
    """A statistic recorded across scales, with an optional attached fit."""

    points: list[SeriesPoint] = dataclasses.field(default_factory=list)
    fit: PowerLawFit | None = None

    def __post_init__(self) -> None:
        self.points = [SeriesPoint(int(p[0]), float(p[1]), float(p[2]))
                       if not isinstance(p, SeriesPoint) else p
                       for p in self.points]
        self._validate()

    def _validate(self) -> None:
        scales = [p.scale for p in self.points]
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValueError("scales must be strictly increasing")
        if any(p.stderr < 0 for p in self.points):
            raise ValueError("standard errors must be nonnegative")

    def append(self, scale: int, value: float, stderr: float = 0.0) -> None:
        self.points.append(SeriesPoint(int(scale), float(value), float(stderr)))
        self._validate()
        self.fit = None

    def scales(self) -> np.ndarray:
        return np.array([p.scale for p in self.points], dtype=np.int64)

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points], dtype=np.float64)

    def stderrs(self) -> np.ndarray:
        return np.array([p.stderr for p in self.points], dtype=np.float64)

    def fitted(self) -> "ScalingSeries":
        """Return the series with a power-law fit attached."""
        return ScalingSeries(list(self.points), fit_power_law(self.points))


def _point_arrays(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(points, ScalingSeries):
        points = points.points
    rows = [(p.scale, p.value, p.stderr) if isinstance(p, SeriesPoint) else p
            for p in points]
    arr = np.array(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("points must be (scale, value, stderr) triples")
    return arr[:, 0], arr[:, 1], arr[:, 2]


def _weighted_line_fit(x: np.ndarray, y: np.ndarray, stderr: np.ndarray):
    """Weighted least squares y = a + b x; returns (a, b, r_squared)."""
    w = 1.0 / np.maximum(stderr, STDERR_FLOOR) ** 2
    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    if sxx == 0.0:
        raise ValueError("scales are degenerate, cannot fit a slope")
    b = (w * (x - xbar) * (y - ybar)).sum() / sxx
    a = ybar - b * xbar
    ss_res = (w * (y - a - b * x) ** 2).sum()
    ss_tot = (w * (y - ybar) ** 2).sum()
    # A constant series is fit exactly by a flat line.
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return a, b, r2


def fit_power_law(points) -> PowerLawFit:
    """Fit value = C * scale^(-alpha) by weighted least squares in log-log.

    The reported exponent is the negated slope, so decaying series have
    positive ``exponent``.  Requires at least three points with positive
    values; callers must threshold noisy series before fitting.
    """
    scale, value, stderr = _point_arrays(points)
    if len(scale) < 3:
        raise ValueError("need at least 3 points to fit a power law")
    if np.any(value <= 0.0):
        raise ValueError("power-law fit requires positive values")
    a, b, r2 = _weighted_line_fit(np.log(scale), np.log(value), stderr)
    return PowerLawFit(exponent=-b, prefactor=math.exp(a), r_squared=r2)


def fit_log_growth(points) -> LogGrowthFit:
    """Fit value = c0 + c1 * ln(scale) by weighted least squares."""
    scale, value, stderr = _point_arrays(points)
    if len(scale) < 3:
        raise ValueError("need at least 3 points to fit logarithmic growth")
    a, b, r2 = _weighted_line_fit(np.log(scale), value, stderr)
    return LogGrowthFit(offset=a, slope=b, r_squared=r2)


def weighted_norm(field: VertexField | EdgeField) -> float:
    """Exponentially weighted l2 norm with weights exp(-|x|).

    Vertex fields are summed over the closed box; edge fields over the
    edges of their own kind, weighted by the tail vertex of the canonical
    orientation.  Absolute coordinates enter the weight, so shifted
    copies of a field are weighted by their new positions.
    """
    if not isinstance(field, (VertexField, EdgeField)):
        raise TypeError("expected a VertexField or an EdgeField")
    box = field.box
    coords = box.coordinate_grid().astype(np.float64)
    dist = np.sqrt((coords ** 2).sum(axis=0))
    if isinstance(field, VertexField):
        total = (field.data ** 2 * np.exp(-dist) * box.plus_mask).sum()
    else:
        mask = box.edge_mask(field.kind)
        total = (field.data ** 2 * np.exp(-dist)[np.newaxis] * mask).sum()
    return math.sqrt(float(total))


def sup_gradient_difference(phi0: VertexField, phi1: VertexField,
                            window: Box) -> float:
    """Largest gradient discrepancy over the window's internal edges.

    Maximizes |grad phi0(e) - grad phi1(e)| over undirected edges with
    both endpoints in the window.  Raises when the window is not
    contained in the overlap of the two domains.
    """
    if window.dim != phi0.box.dim or window.dim != phi1.box.dim:
        raise ValueError("dimension mismatch")
    sub0 = phi0.data[window_slices(window, phi0.box)]
    sub1 = phi1.data[window_slices(window, phi1.box)]
    diff = forward_differences(sub0) - forward_differences(sub1)
    mask = window.edge_mask("interior")
    if not mask.any():
        raise ValueError("window has no internal edges")
    return float(np.abs(diff[mask]).max())


def spatial_average(phi: VertexField, sub: Box) -> float:
    """Arithmetic mean of the field over the sub-box vertices."""
    values = phi.data[window_slices(sub, phi.box)]
    mask = sub.interior_mask
    return float(values[mask].mean())


@dataclasses.dataclass(frozen=True)
class ReconstructionSplit:
    """Decomposition of a height difference at the kernel's base point.

    ``gradient_term``  -- sum of kernel coefficients against the gradient
                          difference of the two fields.
    ``average_term``   -- difference of the spatial averages over the
                          kernel box.
    ``identity_error`` -- worst-case defect of the exact reconstruction
                          identity, checked separately on each field.
    """

    gradient_term: float
    average_term: float
    identity_error: float

    @property
    def total(self) -> float:
        return self.gradient_term + self.average_term


def height_reconstruction_error(phi0: VertexField, phi1: VertexField,
                                x: Sequence[int],
                                kernel: "RepresentationKernel",
                                ) -> ReconstructionSplit:
    """Split phi0(x) - phi1(x) into a gradient part and an average part.

    The kernel must be based at ``x``; each field must contain the kernel
    box.  The identity error reports how far each field individually is
    from height = average + kernel-weighted gradients, which should be at
    solver tolerance.
    """
    x = tuple(int(c) for c in x)
    if x != kernel.center:
        raise ValueError("kernel is not based at the requested vertex")
    grad0, avg0 = kernel.split(phi0)
    grad1, avg1 = kernel.split(phi1)
    err0 = abs(phi0[x] - avg0 - grad0)
    err1 = abs(phi1[x] - avg1 - grad1)
    return ReconstructionSplit(gradient_term=grad0 - grad1,
                               average_term=avg0 - avg1,
                               identity_error=max(err0, err1))


def _select_times(times: np.ndarray, t_lo: float, t_hi: float) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    # Tolerate roundoff in snapshot timestamps at window endpoints.
    slack = 1e-9 * max(1.0, abs(t_hi))
    idx = np.flatnonzero((times >= t_lo - slack) & (times <= t_hi + slack))
    if idx.size == 0:
        raise ValueError("no snapshots in the requested time window")
    return idx


def oscillation(times: np.ndarray, snapshots: np.ndarray, box: Box,
                time_window: tuple[float, float], space_window: Box) -> float:
    """Sup minus inf of a trajectory over a space-time cylinder.

    ``snapshots`` has shape (n_times,) + cube shape and is read on the
    space window's vertices at the snapshots falling inside the closed
    time window.
    """
    t_lo, t_hi = time_window
    if t_hi < t_lo:
        raise ValueError("empty time window")
    idx = _select_times(times, t_lo, t_hi)
    slices = window_slices(space_window, box)
    cylinder = snapshots[idx][(slice(None),) + slices]
    values = cylinder[:, space_window.interior_mask]
    if values.size == 0:
        raise ValueError("empty space window")
    return float(values.max() - values.min())


@dataclasses.dataclass(frozen=True)
class RegularityDiagnostics:
    """Empirical constants from a coupled difference trajectory.

    ``mean_value_ratio`` compares the sup of the squared field over the
    late half cylinder against its squared l2 average over the full
    cylinder.  ``oscillation_ratios`` holds, per dyadic half-width l, the
    oscillation over [T - 4l^2, T] x (box of radius 2l) divided by the
    oscillation over [T - l^2, T] x (box of radius l); the sub-cylinder
    relation makes each ratio at least one, and the measured excess is
    the point.  ``holder_ratio`` normalizes the final-time sup gradient
    over the half-radius window by the space-time l2 average scaled as in
    the parabolic regularity estimate.
    """

    mean_value_ratio: float
    oscillation_ratios: tuple[tuple[int, float], ...]
    holder_ratio: float
    degenerate: bool


def regularity_diagnostics(times: np.ndarray, snapshots: np.ndarray,
                           box: Box) -> RegularityDiagnostics:
    times = np.asarray(times, dtype=np.float64)
    snapshots = np.asarray(snapshots, dtype=np.float64)
    L = box.radius
    if L < 4:
        raise ValueError("diagnostics need radius at least 4")
    t_final = float(times[-1])

    interior = snapshots[:, box.interior_mask]
    mean_square = float((interior ** 2).mean())
    if mean_square == 0.0:
        return RegularityDiagnostics(0.0, (), 0.0, True)

    half = make_box(box.dim, box.center, L // 2)
    half_slices = (slice(None),) + window_slices(half, box)
    late = _select_times(times, t_final / 2.0, t_final)
    late_sup = float((snapshots[late][half_slices][:, half.interior_mask] ** 2).max())
    mean_value_ratio = late_sup / mean_square

    ratios = []
    ell = 2
    while 2 * ell <= L and 4 * ell * ell <= t_final + 1e-9:
        outer = oscillation(times, snapshots, box,
                            (t_final - 4.0 * ell * ell, t_final),
                            make_box(box.dim, box.center, 2 * ell))
        inner = oscillation(times, snapshots, box,
                            (t_final - 1.0 * ell * ell, t_final),
                            make_box(box.dim, box.center, ell))
        ratios.append((ell, outer / inner if inner > 0.0 else math.inf))
        ell *= 2

    final = VertexField(box, snapshots[-1].copy())
    zero = VertexField.zeros(box)
    sup_grad = sup_gradient_difference(final, zero, half)
    # Snapshot average times the span approximates the time integral in
    # the parabolic estimate's right-hand side.
    time_integral = float((interior ** 2).sum(axis=1).mean()) * t_final
    denom = math.sqrt(time_integral / float(L) ** (box.dim + 2))
    holder_ratio = sup_grad / denom

    return RegularityDiagnostics(mean_value_ratio, tuple(ratios),
                                 holder_ratio, False)


def _difference(f0, f1):
    if isinstance(f0, VertexField) and isinstance(f1, VertexField):
        if f0.box != f1.box:
            raise ValueError("paired fields must share a box")
        return VertexField(f0.box, f0.data - f1.data)
    if isinstance(f0, EdgeField) and isinstance(f1, EdgeField):
        if f0.box != f1.box or f0.kind != f1.kind:
            raise ValueError("paired edge fields must share a box and kind")
        return EdgeField(f0.box, f0.kind, f0.data - f1.data)
    raise TypeError("pairs must be two vertex fields or two edge fields")


def empirical_wasserstein_upper(pairs: Iterable[tuple]) -> tuple[float, float]:
    """Mean squared weighted distance of coupled pairs, with standard error.

    Any coupling upper-bounds the squared transport distance between the
    two marginals, so this is a one-sided certificate.  Requires at least
    two pairs.
    """
    squares = np.array([weighted_norm(_difference(f0, f1)) ** 2
                        for f0, f1 in pairs], dtype=np.float64)
    if squares.size < 2:
        raise ValueError("need at least 2 paired samples")
    mean = float(squares.mean())
    stderr = float(squares.std(ddof=1) / math.sqrt(squares.size))
    return mean, stderr


def batch_means_stderr(samples: np.ndarray, n_batches: int = 20) -> float:
    """Standard error of the mean of a correlated sequence by batch means."""
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size < 4:
        raise ValueError("need at least 4 samples for batch means")
    nb = min(int(n_batches), samples.size // 2)
    size = samples.size // nb
    batches = samples[: nb * size].reshape(nb, size).mean(axis=1)
    return float(batches.std(ddof=1) / math.sqrt(nb))


@dataclasses.dataclass(frozen=True)
class VarianceDecomposition:
    """Split of the annealed second moment into thermal and disorder parts.

    For per-realization thermal accumulators m1 and m2 the identity

        mean(m2) = mean(m2 - m1^2) + mean(m1^2)

    holds algebraically; ``residual`` reports its floating-point defect.
    """

    annealed_second_moment: float
    mean_thermal_variance: float
    disorder_mean_square: float

    @property
    def residual(self) -> float:
        return abs(self.annealed_second_moment
                   - self.mean_thermal_variance - self.disorder_mean_square)


def variance_decomposition(thermal_means: np.ndarray,
                           thermal_second_moments: np.ndarray,
                           ) -> VarianceDecomposition:
    m1 = np.asarray(thermal_means, dtype=np.float64).ravel()
    m2 = np.asarray(thermal_second_moments, dtype=np.float64).ravel()
    if m1.shape != m2.shape or m1.size == 0:
        raise ValueError("accumulator arrays must be nonempty and congruent")
    return VarianceDecomposition(
        annealed_second_moment=float(m2.mean()),
        mean_thermal_variance=float((m2 - m1 ** 2).mean()),
        disorder_mean_square=float((m1 ** 2).mean()),
    )


def shift_covariance_check(box: Box, y: Sequence[int], eta: VertexField,
                           config, seed: int) -> float:
    """Sup discrepancy between a run and its coordinate-shifted twin.

    Runs the dynamics on the box with disorder eta, then on the shifted
    box with the relabeled disorder and shift-keyed noise, and compares
    every recorded snapshot sitewise.  The two runs perform identical
    arithmetic on relabeled arrays, so the result must be exactly zero.
    """
    from . import langevin
    from .disorder import SeededStream, shift_field

    y = tuple(int(c) for c in y)
    stream = SeededStream(seed, "dynamics")
    shifted_stream = SeededStream(seed, "dynamics", origin_shift=y)
    shifted_center = tuple(c + dy for c, dy in zip(box.center, y))
    shifted_box = make_box(box.dim, shifted_center, box.radius)

    traj = langevin.simulate(box, eta, config, stream)
    shifted = langevin.simulate(shifted_box, shift_field(eta, y), config,
                                shifted_stream)
    # Both cubes are index-aligned: local index of x in the box equals the
    # local index of x + y in the shifted box.
    return float(np.abs(traj.snapshots - shifted.snapshots).max())
