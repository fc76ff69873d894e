"""Exact ground truth for the quadratic potential.

With ``V(t) = t**2 / 2`` the Gibbs measure on a box with zero boundary
data is Gaussian: mean ``lam * A^{-1} eta`` and covariance ``A^{-1}``,
where ``A`` is the Dirichlet graph Laplacian
``(A phi)(x) = 2d phi(x) - sum_{y ~ x, y in Lambda} phi(y)``.
Every quantity here is computed matrix-free through conjugate gradients;
columns of ``A^{-1}`` are solves against point sources.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ._numerics import conjugate_gradient
from .lattice import Box, VertexField
from .potentials import Potential

DEFAULT_TOL = 1e-10


class DirichletOperator:
    """Matrix-free action of the Dirichlet graph Laplacian on a box."""

    def __init__(self, box: Box):
        self.box = box

    def apply_cube(self, cube: np.ndarray) -> np.ndarray:
        """Apply A to a cube array supported on the interior."""
        box = self.box
        d = box.dim
        out = 2.0 * d * cube
        for a in range(d):
            head = [slice(None)] * d
            tail = [slice(None)] * d
            head[a] = slice(1, None)
            tail[a] = slice(0, -1)
            out[tuple(tail)] -= cube[tuple(head)]
            out[tuple(head)] -= cube[tuple(tail)]
        out[~box.interior_mask] = 0.0
        return out

    def __call__(self, cube: np.ndarray) -> np.ndarray:
        return self.apply_cube(cube)


def _interior_cube(box: Box, field) -> np.ndarray:
    """Cube array of interior values; accepts VertexField or cube ndarray."""
    if isinstance(field, VertexField):
        data = field.data
    else:
        data = np.asarray(field, dtype=np.float64)
        if data.shape != box.shape:
            raise ValueError(f"array shape {data.shape} != cube shape {box.shape}")
    out = np.zeros(box.shape)
    np.copyto(out, data, where=box.interior_mask)
    return out


def _delta(box: Box, x: Sequence[int]) -> np.ndarray:
    if not box.contains(x):
        raise ValueError(f"vertex {tuple(x)} is not interior to {box}")
    cube = np.zeros(box.shape)
    cube[box.local_index(x)] = 1.0
    return cube


def solve_dirichlet(box: Box, rhs, tol: float = DEFAULT_TOL) -> VertexField:
    """Return ``A^{-1} rhs`` with relative residual at most ``tol``."""
    op = DirichletOperator(box)
    b = _interior_cube(box, rhs)
    sol, _ = conjugate_gradient(op, b, tol)
    out = VertexField(box)
    np.copyto(out.data, sol, where=box.interior_mask)
    return out


def mean_field(box: Box, eta: VertexField, lam: float, tol: float = DEFAULT_TOL) -> VertexField:
    """Gaussian thermal mean ``lam * A^{-1} eta`` (zero boundary data)."""
    out = solve_dirichlet(box, eta, tol)
    out.data *= lam
    return out


def harmonic_extension(box: Box, psi: VertexField, tol: float = DEFAULT_TOL) -> VertexField:
    """Discrete-harmonic extension of boundary data ``psi`` into the box.

    Returns the full field: the extension on ``Lambda`` and ``psi`` itself
    on the boundary.  This is the Gaussian mean shift induced by a nonzero
    boundary condition at ``eta = 0``.
    """
    b = np.zeros(box.shape)
    d = box.dim
    boundary = np.where(box.boundary_mask, psi.data, 0.0)
    for a in range(d):
        head = [slice(None)] * d
        tail = [slice(None)] * d
        head[a] = slice(1, None)
        tail[a] = slice(0, -1)
        b[tuple(tail)] += boundary[tuple(head)]
        b[tuple(head)] += boundary[tuple(tail)]
    b[~box.interior_mask] = 0.0
    out = solve_dirichlet(box, b, tol)
    np.copyto(out.data, boundary, where=box.boundary_mask)
    return out


def green_column(box: Box, x: Sequence[int], tol: float = DEFAULT_TOL) -> VertexField:
    """Column ``A^{-1} delta_x`` (the Dirichlet Green's function at x)."""
    return solve_dirichlet(box, _delta(box, x), tol)


def green_diagonal(box: Box, x: Sequence[int], tol: float = DEFAULT_TOL) -> float:
    return green_column(box, x, tol)[tuple(x)]


def exact_height_variance_profile(box: Box, lam: float, tol: float = DEFAULT_TOL) -> float:
    """Disorder variance of the thermal mean at the center.

    For unit-variance i.i.d. disorder and quadratic interaction,
    ``E[<phi(0)>**2] = lam**2 * ||A^{-1} delta_0||_2**2`` exactly.
    """
    col = green_column(box, box.center, tol)
    return float(lam * lam * np.sum(col.data[box.interior_mask] ** 2))


def exact_decorrelation(
    box: Box, x: Sequence[int], y: Sequence[int], lam: float, tol: float = DEFAULT_TOL
) -> float:
    """``E[<phi(x)><phi(y)>] = lam**2 <A^{-1} delta_x, A^{-1} delta_y>``."""
    cx = green_column(box, x, tol)
    cy = green_column(box, y, tol)
    mask = box.interior_mask
    return float(lam * lam * np.sum(cx.data[mask] * cy.data[mask]))


def covariance_inequality_check(
    box: Box, x: Sequence[int], y: Sequence[int], lam: float, tol: float = DEFAULT_TOL
) -> tuple[float, float]:
    """Annealed covariance against its sup-derivative bound.

    Returns ``(lhs, rhs)`` with ``lhs = |E[<phi(x)><phi(y)>]|`` and
    ``rhs = lam**2 sum_z |A^{-1}(x,z)| |A^{-1}(y,z)|``.  In the Gaussian
    case the entries are nonnegative, so the two sides coincide.
    """
    cx = green_column(box, x, tol)
    cy = green_column(box, y, tol)
    mask = box.interior_mask
    lhs = abs(lam * lam * float(np.sum(cx.data[mask] * cy.data[mask])))
    rhs = lam * lam * float(np.sum(np.abs(cx.data[mask]) * np.abs(cy.data[mask])))
    return lhs, rhs


def brascamp_lieb_bound(
    box: Box, x: Sequence[int], potential: Potential, tol: float = DEFAULT_TOL
) -> float:
    """Thermal-variance bound ``Var(phi(x)) <= (1/c_minus) * A^{-1}(x,x)``."""
    return green_diagonal(box, x, tol) / potential.c_minus


def block_average_second_moment(
    box: Box, ell: int, lam: float, tol: float = DEFAULT_TOL
) -> float:
    """Annealed second moment of the average of ``phi`` over ``Lambda_ell``.

    With ``p`` the normalized indicator of the sub-box,
    ``E<|avg phi|**2> = <p, A^{-1} p> + lam**2 ||A^{-1} p||**2``
    (thermal variance plus disorder variance of the thermal mean).
    """
    if ell > box.radius:
        raise ValueError(f"sub-box radius {ell} exceeds box radius {box.radius}")
    sub = Box(box.dim, box.center, ell)
    p = np.zeros(box.shape)
    for x in sub.vertices():
        p[box.local_index(x)] = 1.0
    p /= p.sum()
    u, _ = conjugate_gradient(DirichletOperator(box), p, tol)
    thermal = float(np.dot(p.ravel(), u.ravel()))
    disorder = float(lam * lam * np.sum(u**2))
    return thermal + disorder


def euler_stationary_variance(
    box: Box, x: Sequence[int], dt: float, tol: float = DEFAULT_TOL
) -> float:
    """Exact stationary variance at ``x`` of the Euler-discretized chain.

    The explicit Euler chain for the quadratic model is a linear
    autoregression whose stationary covariance is
    ``(A (I - dt/2 A))^{-1}``; this quantifies the discretization bias of
    endpoint time-averaged second moments.
    """
    op = DirichletOperator(box)

    def apply_biased(cube):
        return op(cube) - (0.5 * dt) * op(op(cube))

    sol, _ = conjugate_gradient(apply_biased, _delta(box, x), tol)
    return float(sol[box.local_index(x)])
