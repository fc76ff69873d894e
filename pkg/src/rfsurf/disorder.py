"""Quenched external field: i.i.d., symmetric, unit variance, reproducible.

Values are keyed by absolute lattice coordinate, never by box-local
index, so two overlapping boxes sampled from the same stream receive
identical field values on their intersection.  The same keying drives
the Brownian increments of the Langevin module (purpose tag ``"noise"``,
draw index = time-step index), which is what makes the shared-noise
coupling across boxes automatic.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import _numerics as nx
from .lattice import Box, VertexField

#: supported disorder laws; all symmetric about 0 with variance exactly 1
LAWS = ("rademacher", "standard-gaussian", "uniform-scaled")


class SeededStream:
    """Counter-based generator keyed by (seed, purpose, coordinate, draw).

    ``origin_shift`` subtracts a fixed vector from every coordinate before
    keying, realizing disorder and noise relabeled by a lattice shift: the
    stream for the shifted box reproduces the unshifted values bitwise.
    """

    def __init__(self, seed: int, purpose: str, origin_shift: Sequence[int] | None = None):
        self.seed = int(seed)
        self.purpose = purpose
        self.origin_shift = tuple(int(v) for v in origin_shift) if origin_shift else None
        self._purpose_key = nx.purpose_key_scalar(self.seed, purpose)
        self._key_cache: dict[Box, np.ndarray] = {}

    def with_purpose(self, purpose: str) -> "SeededStream":
        return SeededStream(self.seed, purpose, self.origin_shift)

    def value_bits(self, coords: Sequence[int], draw: int = 0) -> int:
        """Scalar reference path: the 64 output bits for one site."""
        if self.origin_shift is not None:
            coords = [c - s for c, s in zip(coords, self.origin_shift)]
        return nx.draw_bits_scalar(nx.site_key_scalar(self._purpose_key, coords), draw)

    def site_keys(self, box: Box) -> np.ndarray:
        """Per-site keys on the bounding cube of the box (uint64)."""
        if box not in self._key_cache:
            grid = box.coordinate_grid()
            if self.origin_shift is not None:
                grid = grid - np.asarray(self.origin_shift).reshape((-1,) + (1,) * box.dim)
            self._key_cache[box] = nx.site_keys(self._purpose_key, grid)
        return self._key_cache[box]

    def cube_bits(self, box: Box, draw: int = 0) -> np.ndarray:
        return nx.draw_bits(self.site_keys(box), draw)

    def normals(self, box: Box, draw: int = 0) -> np.ndarray:
        """Standard gaussians on the bounding cube, one per site."""
        return nx.bits_to_normal(self.cube_bits(box, draw))


def sample_field(law: str, box: Box, stream: SeededStream, draw: int = 0) -> VertexField:
    """Sample the disorder on ``Lambda^+``, keyed by absolute coordinate."""
    if law not in LAWS:
        raise ValueError(f"unknown disorder law {law!r}; expected one of {LAWS}")
    bits = stream.cube_bits(box, draw)
    if law == "rademacher":
        values = nx.bits_to_rademacher(bits)
    elif law == "standard-gaussian":
        values = nx.bits_to_normal(bits)
    else:
        values = nx.bits_to_uniform_scaled(bits)
    field = VertexField(box)
    np.copyto(field.data, values, where=box.plus_mask)
    return field


def shift_field(field: VertexField, y: Sequence[int]) -> VertexField:
    """Relabel a field by a lattice shift: ``out(x) = field(x - y)``."""
    box = field.box
    y = tuple(int(v) for v in y)
    if len(y) != box.dim:
        raise ValueError(f"shift {y} does not match dimension {box.dim}")
    shifted_box = Box(box.dim, tuple(c + dy for c, dy in zip(box.center, y)), box.radius)
    out = VertexField(shifted_box)
    out.data = field.data.copy()
    return out
