"""Neumann representation kernels: heights from gradients plus an average.

For a box with vertex set B and internal edge set E(B), the mean-zero
solution G of the Neumann problem

    sum_{y ~ z, zy in E(B)} (G(z) - G(y)) = delta_x(z) - 1/|B|

yields edge coefficients f = grad G satisfying, for every field phi,

    sum_{e in E(B)} f(e) * grad phi(e) = phi(x) - (1/|B|) sum_y phi(y).

The identity follows by summation by parts and holds for arbitrary phi,
constants included.  The coefficients stay bounded by a constant that
depends only on the dimension, which is what makes the height
reconstruction argument across scales work; ``sup_norm_study`` measures
that bound empirically.

The Neumann operator is singular on constants, so the conjugate gradient
iteration is projected onto the mean-zero subspace at every step.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from ._numerics import conjugate_gradient
from .lattice import (Box, EdgeField, VertexField, forward_differences,
                      make_box, window_slices)
from .observables import ScalingSeries

__all__ = [
    "DEFAULT_TOL",
    "RepresentationKernel",
    "SupNormStudy",
    "build_kernel",
    "sup_norm_study",
]

DEFAULT_TOL = 1e-10


def _neumann_apply(box: Box):
    """Matrix-free Neumann Laplacian on the box vertices (positive sign)."""
    dim = box.dim
    masks = box.edge_mask("interior")

    def apply_op(cube: np.ndarray) -> np.ndarray:
        out = np.zeros_like(cube)
        for a in range(dim):
            head = [slice(None)] * dim
            tail = [slice(None)] * dim
            head[a] = slice(1, None)
            tail[a] = slice(0, -1)
            head, tail = tuple(head), tuple(tail)
            diff = np.where(masks[(a,) + tail],
                            cube[head] - cube[tail], 0.0)
            out[head] += diff
            out[tail] -= diff
        return out

    return apply_op


@dataclasses.dataclass(frozen=True)
class RepresentationKernel:
    """Edge coefficients reconstructing the height at the base vertex."""

    box: Box
    center: tuple[int, ...]
    coefficients: EdgeField
    sup_norm: float
    potential_values: VertexField

    def split(self, phi: VertexField) -> tuple[float, float]:
        """Gradient term and spatial average of the identity for phi."""
        sub = phi.data[window_slices(self.box, phi.box)]
        diffs = forward_differences(sub)
        mask = self.box.edge_mask("interior")
        grad_term = float((self.coefficients.data * diffs)[mask].sum())
        average = float(sub[self.box.interior_mask].mean())
        return grad_term, average

    def reconstruct(self, phi: VertexField) -> float:
        grad_term, average = self.split(phi)
        return grad_term + average

    def residual(self, phi: VertexField) -> float:
        """Defect of the reconstruction identity on a concrete field."""
        return abs(phi[self.center] - self.reconstruct(phi))


def build_kernel(box: Box, x: Sequence[int] | None = None,
                 tol: float = DEFAULT_TOL) -> RepresentationKernel:
    """Construct the representation kernel based at x (default: center).

    Solves the mean-zero Neumann problem by projected conjugate
    gradients; ``tol`` bounds the relative linear residual.  A radius
    zero box has no internal edges and the identity degenerates to
    phi(x) = phi(x).
    """
    x = box.center if x is None else tuple(int(c) for c in x)
    if not box.contains(x):
        raise ValueError("base vertex must lie in the box")
    interior = box.interior_mask
    n = box.n_interior

    rhs = np.zeros(box.shape, dtype=np.float64)
    rhs[box.local_index(x)] = 1.0
    rhs[interior] -= 1.0 / n

    def project(cube: np.ndarray) -> np.ndarray:
        out = np.where(interior, cube, 0.0)
        out[interior] -= out[interior].mean()
        return out

    if n == 1:
        potential = np.zeros(box.shape, dtype=np.float64)
    else:
        potential, _ = conjugate_gradient(_neumann_apply(box), rhs, tol,
                                          project=project)

    flux = forward_differences(potential)
    mask = box.edge_mask("interior")
    flux[~mask] = 0.0
    coefficients = EdgeField(box, "interior", flux)
    sup = float(np.abs(flux[mask]).max()) if mask.any() else 0.0
    return RepresentationKernel(
        box=box,
        center=x,
        coefficients=coefficients,
        sup_norm=sup,
        potential_values=VertexField(box, potential),
    )


@dataclasses.dataclass(frozen=True)
class SupNormStudy:
    """Kernel sup norms across radii plus an empirical boundedness flag."""

    series: ScalingSeries
    bounded: bool


def sup_norm_study(dim: int, radii: Sequence[int],
                   tol: float = DEFAULT_TOL) -> SupNormStudy:
    """Largest kernel coefficient per radius, center-based kernels.

    The flag is set when the value at the largest radius stays within
    twice the value at the second largest, the empirical stand-in for
    the dimension-dependent bound.
    """
    radii = [int(r) for r in radii]
    if not radii:
        raise ValueError("need at least one radius")
    series = ScalingSeries()
    for r in radii:
        kernel = build_kernel(make_box(dim, (0,) * dim, r), tol=tol)
        series.append(r, kernel.sup_norm, 0.0)
    values = series.values()
    bounded = True
    if len(values) >= 2 and values[-2] > 0.0:
        bounded = bool(values[-1] <= 2.0 * values[-2])
    return SupNormStudy(series=series, bounded=bounded)
