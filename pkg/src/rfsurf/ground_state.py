"""Energy of a pinned random surface and its quenched ground state.

The energy of a field vanishing on the box boundary is

    H(phi) = sum_{e in E(closed box)} V(grad phi(e)) - lam * sum_{x} eta(x) phi(x),

with every undirected edge counted once.  This normalization is held
fixed across the whole package (the dynamics, the oracle operator and
the coupling all use it); it differs from the ordered-pair convention by
an overall factor of two in the interaction term, which rescales
temperature but no scaling exponent.

The ground state is the unique minimizer of H over fields vanishing on
the boundary, equivalently the solution of

    sum_{y ~ x} V'(phi(y) - phi(x)) + lam * eta(x) = 0   for x inside,

and is computed by red-black nonlinear Gauss-Seidel with a one
dimensional Newton update per site.  Uniform convexity of V makes the
per-site curvature at least 2d * c_minus, so the Newton denominator is
floored there.  If a block of Newton sweeps ever fails to reduce the
residual, the solver restarts the block with global gradient descent at
step 1/(2d * c_plus), which decreases the energy monotonically.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .disorder import sample_field, SeededStream
from .lattice import Box, VertexField, forward_differences, make_box
from .observables import ScalingSeries, sup_gradient_difference
from .potentials import Potential

__all__ = [
    "GroundStateSolution",
    "dyadic_gap_statistic",
    "dyadic_ground_state_study",
    "energy",
    "equation_residual",
    "solve",
]

DEFAULT_TOL = 1e-10

# Residual is re-evaluated once per block of sweeps; each check snapshots
# the field so a non-contracting Newton block can be rolled back.
CHECK_EVERY = 8


def _require_pinned(phi: VertexField) -> None:
    if phi.boundary_values().any():
        raise ValueError("field must vanish on the box boundary")


def energy(phi: VertexField, eta: VertexField, lam: float,
           potential: Potential) -> float:
    """Interaction plus field energy, one term per undirected edge."""
    _require_pinned(phi)
    box = phi.box
    diffs = forward_differences(phi.data)
    interaction = float(potential.value(diffs[box.edge_mask("plus")]).sum())
    pinning = float((eta.data * phi.data)[box.interior_mask].sum())
    return interaction - lam * pinning


def equation_residual(phi: VertexField, eta: VertexField, lam: float,
                      potential: Potential) -> VertexField:
    """Residual of the ground-state equation, nonzero only inside.

    At interior x this is sum_{y ~ x} V'(phi(y) - phi(x)) + lam * eta(x),
    the negated energy gradient.  The same expression drives the Langevin
    dynamics.
    """
    box = phi.box
    flux = potential.prime(forward_differences(phi.data))
    res = _divergence(flux, box)
    res[box.interior_mask] += lam * eta.data[box.interior_mask]
    res[~box.interior_mask] = 0.0
    return VertexField(box, res)


def _divergence(flux: np.ndarray, box: Box) -> np.ndarray:
    """Divergence of per-axis forward-edge values at interior sites."""
    out = np.zeros(box.shape, dtype=np.float64)
    for a in range(box.dim):
        out += flux[a]
        head = [slice(None)] * box.dim
        tail = [slice(None)] * box.dim
        head[a] = slice(1, None)
        tail[a] = slice(0, -1)
        out[tuple(head)] -= flux[(a,) + tuple(tail)]
    return out


@dataclasses.dataclass
class GroundStateSolution:
    """Certified minimizer of the pinned-surface energy."""

    field: VertexField
    residual: float
    iterations: int
    energy: float


def _neighbor_terms(cube: np.ndarray, eta_cube: np.ndarray, lam: float,
                    potential: Potential, dim: int):
    """Residual and curvature of the per-site scalar equations, vectorized.

    Returns (F, Fp) over the whole cube where F(x) is the equation
    residual at x and Fp(x) = sum over neighbors of V''(phi(y) - phi(x)).
    Entries outside the interior are meaningless and must be masked.
    """
    F = lam * eta_cube.copy()
    Fp = np.zeros_like(cube)
    for a in range(dim):
        up = np.empty_like(cube)
        dn = np.empty_like(cube)
        head = [slice(None)] * dim
        tail = [slice(None)] * dim
        head[a] = slice(1, None)
        tail[a] = slice(0, -1)
        up[tuple(tail)] = cube[tuple(head)]
        up[tuple(head[:a] + [slice(-1, None)] + head[a + 1:])] = 0.0
        dn[tuple(head)] = cube[tuple(tail)]
        dn[tuple(tail[:a] + [slice(0, 1)] + tail[a + 1:])] = 0.0
        F += potential.prime(up - cube) + potential.prime(dn - cube)
        Fp += potential.second(up - cube) + potential.second(dn - cube)
    return F, Fp


def _color_masks(box: Box, first_color: int) -> list[np.ndarray]:
    parity = box.coordinate_grid().sum(axis=0) % 2
    masks = [box.interior_mask & (parity == 0),
             box.interior_mask & (parity == 1)]
    if first_color % 2 == 1:
        masks.reverse()
    return masks


def solve(box: Box, eta: VertexField, lam: float, potential: Potential,
          tol: float = DEFAULT_TOL, max_sweeps: int | None = None,
          first_color: int = 0) -> GroundStateSolution:
    """Minimize the energy over fields vanishing on the boundary.

    ``tol`` bounds the sup norm of the equation residual of the returned
    field.  ``first_color`` selects which red-black half-sweep runs
    first; the minimizer is unique, so the choice only affects rounding.
    Raises ``ConvergenceError`` when the sweep cap is exhausted.
    """
    from ._numerics import ConvergenceError

    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    if max_sweeps is None:
        # Gauss-Seidel contracts like 1 - c / L^2 per sweep; the cap
        # leaves a wide margin over the expected count at tol 1e-10.
        max_sweeps = 400 + 120 * (box.radius + 1) ** 2

    dim = box.dim
    interior = box.interior_mask
    eta_cube = np.where(interior, eta.data, 0.0)
    cube = np.zeros(box.shape, dtype=np.float64)
    masks = _color_masks(box, first_color)
    floor = 2.0 * dim * potential.c_minus
    descent_step = 1.0 / (2.0 * dim * potential.c_plus)

    def residual_sup(c: np.ndarray) -> float:
        F, _ = _neighbor_terms(c, eta_cube, lam, potential, dim)
        return float(np.abs(np.where(interior, F, 0.0)).max())

    mode_newton = True
    sweeps = 0
    last_sup = residual_sup(cube)
    snapshot = cube.copy()
    while last_sup > tol:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"ground-state solve stalled at residual {last_sup:.3e} "
                f"after {sweeps} sweeps (tol {tol:.1e})")
        for _ in range(CHECK_EVERY):
            if mode_newton:
                for mask in masks:
                    F, Fp = _neighbor_terms(cube, eta_cube, lam,
                                            potential, dim)
                    step = F / np.maximum(Fp, floor)
                    cube[mask] += step[mask]
            else:
                F, _ = _neighbor_terms(cube, eta_cube, lam, potential, dim)
                cube[interior] += descent_step * F[interior]
            sweeps += 1
        sup = residual_sup(cube)
        if mode_newton and sup >= last_sup and sup > tol:
            # Newton block failed to contract: roll back and fall back to
            # the provably monotone descent step.
            cube = snapshot.copy()
            mode_newton = False
            continue
        last_sup = sup
        snapshot = cube.copy()

    field = VertexField(box, cube)
    return GroundStateSolution(
        field=field,
        residual=residual_sup(cube),
        iterations=sweeps,
        energy=energy(field, eta, lam, potential),
    )


def dyadic_ground_state_study(dim: int, lam: float, potential: Potential,
                              law: str, scales: Sequence[int],
                              n_seeds: int, seed: int = 0,
                              tol: float = DEFAULT_TOL) -> ScalingSeries:
    """Decay of successive ground-state gradients across dyadic scales.

    For each scale L the statistic is the mean over disorder seeds of

        sup over edges of the half box |grad v_{2L} - grad v_L|,

    where both ground states see the same disorder realization: site
    values are keyed by absolute coordinate, so the field on the smaller
    box is the restriction of the field on the larger one.
    """
    scales = [int(L) for L in scales]
    if len(scales) < 2:
        raise ValueError("need at least two scales")
    if scales[0] < 2:
        raise ValueError("smallest scale must be at least 2")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly increasing")
    if n_seeds < 1:
        raise ValueError("need at least one seed")

    series = ScalingSeries()
    for L in scales:
        stats = []
        for i in range(n_seeds):
            stream = SeededStream(seed, f"disorder#{i}")
            stats.append(dyadic_gap_statistic(dim, L, lam, potential,
                                              law, stream, tol))
        values = np.array(stats, dtype=np.float64)
        stderr = 0.0 if n_seeds == 1 else \
            float(values.std(ddof=1) / math.sqrt(n_seeds))
        series.append(L, float(values.mean()), stderr)
    if len(series.points) >= 3 and all(p.value > 0 for p in series.points):
        series = series.fitted()
    return series


def dyadic_gap_statistic(dim: int, scale: int, lam: float,
                         potential: Potential, law: str,
                         stream: SeededStream,
                         tol: float = DEFAULT_TOL) -> float:
    """Sup gradient gap between ground states at scales L and 2L.

    Both solves see the restriction of one disorder realization, so the
    value is a pure function of (stream, scale).
    """
    if scale < 2:
        raise ValueError("scale must be at least 2 so the comparison "
                         "window has edges")
    center = (0,) * dim
    small = make_box(dim, center, scale)
    large = make_box(dim, center, 2 * scale)
    eta_small = sample_field(law, small, stream)
    eta_large = sample_field(law, large, stream)
    v_small = solve(small, eta_small, lam, potential, tol).field
    v_large = solve(large, eta_large, lam, potential, tol).field
    window = make_box(dim, center, scale // 2)
    return sup_gradient_difference(v_large, v_small, window)
