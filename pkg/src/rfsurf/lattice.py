"""Finite boxes of the integer lattice and fields living on them.

A box of radius ``L`` centered at ``c`` is the vertex set
``Lambda = {x : |x_i - c_i| <= L for all i}`` with ``(2L+1)**d`` vertices.
Its external vertex boundary ``boundary`` consists of the vertices at
lattice distance one from ``Lambda``, and ``Lambda^+`` is their union.

Fields are stored as dense arrays over the bounding cube of ``Lambda^+``
(side ``2L+3``), indexed row-major; cube corners that do not belong to
``Lambda^+`` are kept at zero and are never read by lattice operations.
Edges are identified with their canonical positive orientation
``(x, x + e_a)`` and enumerated axis-major, then lexicographically in the
base vertex.
"""

from __future__ import annotations

from typing import Callable, Iterator, Sequence

import numpy as np

Vertex = tuple[int, ...]
Edge = tuple[Vertex, Vertex]

# Edge families of a box, by endpoint membership:
#   interior: both endpoints in Lambda
#   touching: at least one endpoint in Lambda (the edges that feel a
#             field's interior values; both endpoints lie in Lambda^+)
#   plus:     both endpoints in Lambda^+ (includes boundary-boundary pairs)
EDGE_KINDS = ("interior", "touching", "plus")


class Box:
    """A cube ``Lambda`` of radius ``L`` around ``center`` in ``Z^d``."""

    def __init__(self, dim: int, center: Sequence[int], radius: int):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        if radius < 0:
            raise ValueError(f"radius must be >= 0, got {radius}")
        center = tuple(int(c) for c in center)
        if len(center) != dim:
            raise ValueError(f"center {center} does not match dimension {dim}")
        self.dim = dim
        self.center = center
        self.radius = radius
        self.side = 2 * radius + 1
        # bounding cube of Lambda^+, one ring around Lambda
        self.cube_side = 2 * radius + 3
        self.shape = (self.cube_side,) * dim
        self.origin = tuple(c - radius - 1 for c in center)

        # |offset from center| per axis, on the bounding cube
        axes = np.arange(self.cube_side) - (radius + 1)
        dist = np.abs(axes)
        grids = np.meshgrid(*([dist] * dim), indexing="ij", copy=False)
        stacked = np.stack(grids)
        self.interior_mask = np.all(stacked <= radius, axis=0)
        self.plus_mask = np.sum(np.maximum(stacked - radius, 0), axis=0) <= 1
        self.boundary_mask = self.plus_mask & ~self.interior_mask
        self._edge_masks: dict[str, np.ndarray] = {}

    # -- identity ----------------------------------------------------------

    def __repr__(self) -> str:
        return f"Box(dim={self.dim}, center={self.center}, radius={self.radius})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Box)
            and self.dim == other.dim
            and self.center == other.center
            and self.radius == other.radius
        )

    def __hash__(self) -> int:
        return hash((self.dim, self.center, self.radius))

    # -- vertex membership and indexing ------------------------------------

    @property
    def n_interior(self) -> int:
        return self.side**self.dim

    def contains(self, x: Sequence[int]) -> bool:
        return all(abs(int(xi) - c) <= self.radius for xi, c in zip(x, self.center))

    def contains_plus(self, x: Sequence[int]) -> bool:
        excess = [max(abs(int(xi) - c) - self.radius, 0) for xi, c in zip(x, self.center)]
        return sum(excess) <= 1 and max(excess, default=0) <= 1

    def on_boundary(self, x: Sequence[int]) -> bool:
        return self.contains_plus(x) and not self.contains(x)

    def local_index(self, x: Sequence[int]) -> tuple[int, ...]:
        """Cube index of an absolute vertex; no membership check."""
        return tuple(int(xi) - o for xi, o in zip(x, self.origin))

    def vertex_at(self, local: Sequence[int]) -> Vertex:
        return tuple(int(li) + o for li, o in zip(local, self.origin))

    # -- deterministic enumerations ----------------------------------------

    def vertices(self) -> Iterator[Vertex]:
        """Vertices of ``Lambda`` in row-major (lexicographic) order."""
        yield from self._mask_vertices(self.interior_mask)

    def boundary_vertices(self) -> Iterator[Vertex]:
        yield from self._mask_vertices(self.boundary_mask)

    def plus_vertices(self) -> Iterator[Vertex]:
        yield from self._mask_vertices(self.plus_mask)

    def _mask_vertices(self, mask: np.ndarray) -> Iterator[Vertex]:
        for flat in np.flatnonzero(mask.ravel()):
            yield self.vertex_at(np.unravel_index(flat, self.shape))

    def coordinate_grid(self) -> np.ndarray:
        """Absolute coordinates of every cube site, shape ``(dim,) + shape``."""
        axes = [np.arange(self.cube_side) + o for o in self.origin]
        return np.stack(np.meshgrid(*axes, indexing="ij", copy=False))

    def edge_mask(self, kind: str) -> np.ndarray:
        """Validity of forward edges ``(p, p + e_a)``, shape ``(dim,) + shape``.

        Entry ``[a, p]`` is True when the edge from cube site ``p`` along
        axis ``a`` belongs to the requested family.
        """
        if kind not in EDGE_KINDS:
            raise ValueError(f"unknown edge kind {kind!r}")
        if kind not in self._edge_masks:
            masks = np.zeros((self.dim,) + self.shape, dtype=bool)
            member = {
                "interior": (self.interior_mask, self.interior_mask),
                "plus": (self.plus_mask, self.plus_mask),
            }
            for a in range(self.dim):
                head = [slice(None)] * self.dim
                tail = [slice(None)] * self.dim
                head[a] = slice(1, None)
                tail[a] = slice(0, -1)
                if kind == "touching":
                    ok = self.interior_mask[tuple(tail)] | self.interior_mask[tuple(head)]
                else:
                    m0, m1 = member[kind]
                    ok = m0[tuple(tail)] & m1[tuple(head)]
                masks[(a,) + tuple(tail)] = ok
            self._edge_masks[kind] = masks
        return self._edge_masks[kind]

    def edges(self, kind: str = "plus") -> Iterator[Edge]:
        """Edges in canonical orientation, axis-major then lexicographic."""
        mask = self.edge_mask(kind)
        for a in range(self.dim):
            for flat in np.flatnonzero(mask[a].ravel()):
                local = np.unravel_index(flat, self.shape)
                x = self.vertex_at(local)
                y = list(x)
                y[a] += 1
                yield (x, tuple(y))

    def edge_count(self, kind: str = "plus") -> int:
        return int(self.edge_mask(kind).sum())

    def interior_slice(self) -> tuple[slice, ...]:
        """Slice of the bounding cube selecting exactly ``Lambda``."""
        return (slice(1, -1),) * self.dim

    def neighbors(self, x: Sequence[int]) -> Iterator[Vertex]:
        x = tuple(int(xi) for xi in x)
        for a in range(self.dim):
            for s in (-1, 1):
                y = list(x)
                y[a] += s
                yield tuple(y)


def make_box(dim: int, center: Sequence[int], radius: int) -> Box:
    """Convenience constructor for :class:`Box`."""
    return Box(dim, center, radius)


class VertexField:
    """Real field on ``Lambda^+`` of a box, zero-padded on cube corners."""

    def __init__(self, box: Box, data: np.ndarray | None = None):
        self.box = box
        if data is None:
            data = np.zeros(box.shape)
        else:
            data = np.asarray(data, dtype=np.float64)
            if data.shape != box.shape:
                raise ValueError(f"data shape {data.shape} != cube shape {box.shape}")
            data = data.copy()
            data[~box.plus_mask] = 0.0
        self.data = data

    @classmethod
    def zeros(cls, box: Box) -> "VertexField":
        return cls(box)

    @classmethod
    def from_function(cls, box: Box, fn: Callable[[Vertex], float]) -> "VertexField":
        field = cls(box)
        for x in box.plus_vertices():
            field[x] = fn(x)
        return field

    def _checked_index(self, x: Sequence[int]) -> tuple[int, ...]:
        if not self.box.contains_plus(x):
            raise KeyError(f"vertex {tuple(x)} is outside Lambda^+ of {self.box}")
        return self.box.local_index(x)

    def __getitem__(self, x: Sequence[int]) -> float:
        return float(self.data[self._checked_index(x)])

    def __setitem__(self, x: Sequence[int], value: float) -> None:
        self.data[self._checked_index(x)] = value

    def copy(self) -> "VertexField":
        out = VertexField(self.box)
        out.data = self.data.copy()
        return out

    def interior_values(self) -> np.ndarray:
        """Values on ``Lambda`` in row-major vertex order."""
        return self.data[self.box.interior_mask]

    def boundary_values(self) -> np.ndarray:
        return self.data[self.box.boundary_mask]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.data[self.box.plus_mask])))


class EdgeField:
    """Antisymmetric edge field stored on canonical forward orientations.

    ``data[a, p]`` holds the value on the directed edge
    ``(p, p + e_a)``; querying the reversed orientation negates it.
    """

    def __init__(self, box: Box, kind: str, data: np.ndarray | None = None):
        if kind not in EDGE_KINDS:
            raise ValueError(f"unknown edge kind {kind!r}")
        self.box = box
        self.kind = kind
        full = (box.dim,) + box.shape
        if data is None:
            data = np.zeros(full)
        else:
            data = np.asarray(data, dtype=np.float64)
            if data.shape != full:
                raise ValueError(f"data shape {data.shape} != {full}")
            data = data.copy()
            data[~box.edge_mask(kind)] = 0.0
        self.data = data

    def _locate(self, x: Sequence[int], y: Sequence[int]) -> tuple[int, tuple[int, ...], int]:
        """Return (axis, base cube index, sign) of the edge x -> y."""
        x = tuple(int(v) for v in x)
        y = tuple(int(v) for v in y)
        diff = [yi - xi for xi, yi in zip(x, y)]
        nz = [a for a, dv in enumerate(diff) if dv != 0]
        if len(nz) != 1 or abs(diff[nz[0]]) != 1:
            raise ValueError(f"{x} -> {y} is not a lattice edge")
        a = nz[0]
        base, sign = (x, 1) if diff[a] == 1 else (y, -1)
        local = self.box.local_index(base)
        cube = self.box.cube_side
        if any(li < 0 or li >= cube for li in local):
            raise KeyError(f"edge {x} -> {y} is outside the box cube")
        if not self.box.edge_mask(self.kind)[(a,) + local]:
            raise KeyError(f"edge {x} -> {y} is not a {self.kind!r} edge of {self.box}")
        return a, local, sign

    def value(self, x: Sequence[int], y: Sequence[int]) -> float:
        a, local, sign = self._locate(x, y)
        return sign * float(self.data[(a,) + local])

    def set(self, x: Sequence[int], y: Sequence[int], value: float) -> None:
        a, local, sign = self._locate(x, y)
        self.data[(a,) + local] = sign * value

    def sup_norm(self) -> float:
        vals = self.data[self.box.edge_mask(self.kind)]
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    def copy(self) -> "EdgeField":
        out = EdgeField(self.box, self.kind)
        out.data = self.data.copy()
        return out


def window_slices(window: Box, parent: Box) -> tuple[slice, ...]:
    """Slices of the parent cube covering the window cube exactly.

    Requires the window's closed box, boundary included, to sit inside
    the parent's bounding cube, so windowed reads stay in defined memory.
    """
    slices = []
    for a in range(parent.dim):
        start = window.origin[a] - parent.origin[a]
        stop = start + window.cube_side
        if start < 0 or stop > parent.cube_side:
            raise ValueError("window not contained in the parent box")
        slices.append(slice(start, stop))
    return tuple(slices)


def forward_differences(data: np.ndarray) -> np.ndarray:
    """Forward difference arrays along every axis, zero on the last slab."""
    d = data.ndim
    out = np.zeros((d,) + data.shape, dtype=np.float64)
    for a in range(d):
        head = [slice(None)] * d
        tail = [slice(None)] * d
        head[a] = slice(1, None)
        tail[a] = slice(0, -1)
        out[(a,) + tuple(tail)] = data[tuple(head)] - data[tuple(tail)]
    return out


def gradient(field: VertexField, kind: str = "plus") -> EdgeField:
    """Discrete gradient ``(grad phi)(x, y) = phi(y) - phi(x)``."""
    box = field.box
    diffs = forward_differences(field.data)
    diffs[~box.edge_mask(kind)] = 0.0
    out = EdgeField(box, kind)
    out.data = diffs
    return out


def divergence_of_flux(flux, x: Sequence[int], box: Box | None = None) -> float:
    """Sum of a flux over the ``2d`` directed edges leaving vertex ``x``.

    ``flux`` is an :class:`EdgeField` or a callable on directed edges
    ``flux(x, y)``; ``x`` must lie in the interior ``Lambda``.
    """
    if isinstance(flux, EdgeField):
        box = flux.box
        getter = flux.value
    else:
        if box is None:
            raise ValueError("a Box is required when flux is a callable")
        getter = flux
    if not box.contains(x):
        raise ValueError(f"vertex {tuple(x)} is not in the interior of {box}")
    x = tuple(int(v) for v in x)
    total = 0.0
    for y in box.neighbors(x):
        total += getter(x, y)
    return total


def divergence_interior(flux: EdgeField) -> np.ndarray:
    """Vectorized divergence on every cube site of ``Lambda`` (cube array).

    Sites outside ``Lambda`` are set to zero.  Uses the convention of
    :func:`divergence_of_flux`: the sum of the flux on edges leaving the
    site, i.e. ``sum_a data[a, p] - data[a, p - e_a]``.
    """
    box = flux.box
    d = box.dim
    out = np.zeros(box.shape)
    for a in range(d):
        head = [slice(None)] * d
        tail = [slice(None)] * d
        head[a] = slice(1, None)
        tail[a] = slice(0, -1)
        # flux out of p along axis a: data[a, p] forward, -data[a, p - e_a] backward
        out[tuple(head)] += flux.data[(a,) + tuple(head)] - flux.data[(a,) + tuple(tail)]
    out[~box.interior_mask] = 0.0
    return out
