"""Deterministic hashing and scalar numeric kernels shared across modules.

Key derivation (version 1, frozen): a splitmix-style 64-bit finalizer
``mix13`` is chained over the master seed, the length-framed purpose tag,
the absolute lattice coordinates (two's complement), and the draw index:

    h = mix13(seed ^ GOLD)
    h = mix13(h ^ len(purpose_bytes))
    h = mix13(h ^ b)              for each purpose byte b
    s = mix13(h ^ coord_a)        for each coordinate, in axis order
    value_bits = mix13(s ^ draw_index)

Every random value in the package is a pure function of
``(seed, purpose, coordinate, draw)``; generation order never matters.

Value maps from 64 output bits: the top 53 bits give a uniform
``u = (bits + 0.5) * 2**-53`` in (0, 1); normals apply Wichura's PPND16
inverse normal CDF (max observed deviation from scipy's ndtri ~2e-15);
the sign bit gives Rademacher values.
"""

from __future__ import annotations

import numpy as np

M64 = (1 << 64) - 1
GOLD = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
U53_SCALE = float(2.0**-53)


def mix13_scalar(z: int) -> int:
    """Reference finalizer on Python ints (Stafford's Mix13 variant)."""
    z &= M64
    z = ((z ^ (z >> 30)) * _MIX_A) & M64
    z = ((z ^ (z >> 27)) * _MIX_B) & M64
    return (z ^ (z >> 31)) & M64


def mix13(z: np.ndarray) -> np.ndarray:
    """Vectorized finalizer on uint64 arrays."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX_A)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX_B)
    z ^= z >> np.uint64(31)
    return z


def purpose_key_scalar(seed: int, purpose: str) -> int:
    data = purpose.encode("utf-8")
    h = mix13_scalar((int(seed) & M64) ^ GOLD)
    h = mix13_scalar(h ^ len(data))
    for b in data:
        h = mix13_scalar(h ^ b)
    return h


def site_key_scalar(purpose_key: int, coords) -> int:
    s = purpose_key
    for c in coords:
        s = mix13_scalar(s ^ (int(c) & M64))
    return s


def draw_bits_scalar(site_key: int, draw: int) -> int:
    return mix13_scalar(site_key ^ (int(draw) & M64))


def site_keys(purpose_key: int, coord_grid: np.ndarray) -> np.ndarray:
    """Vectorized site keys; ``coord_grid`` has shape ``(d,) + spatial``."""
    keys = np.full(coord_grid.shape[1:], purpose_key, dtype=np.uint64)
    for a in range(coord_grid.shape[0]):
        # two's complement reinterpretation matches (c & M64) on Python ints
        keys ^= coord_grid[a].astype(np.int64).view(np.uint64)
        keys = mix13(keys)
    return keys


def draw_bits(keys: np.ndarray, draw: int) -> np.ndarray:
    return mix13(keys ^ np.uint64(int(draw) & M64))


def bits_to_uniform(bits: np.ndarray) -> np.ndarray:
    """Top 53 bits to the open interval (0, 1), symmetric about 1/2."""
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * U53_SCALE


def bits_to_rademacher(bits: np.ndarray) -> np.ndarray:
    return np.where((bits >> np.uint64(63)).astype(bool), 1.0, -1.0)


# ---------------------------------------------------------------------------
# PPND16 (Wichura, Algorithm AS 241): inverse normal CDF, double precision.

PPND16_A = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
PPND16_B = (
    4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
    5.2264952788528545610e3,
)
PPND16_C = (
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
PPND16_D = (
    2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
PPND16_E = (
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
PPND16_F = (
    5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
    7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coeffs, r):
    acc = np.full_like(r, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * r + c
    return acc


def ppnd16(p: np.ndarray) -> np.ndarray:
    """Vectorized inverse normal CDF on (0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    out = np.empty_like(p)

    core = np.abs(q) <= 0.425
    r = 0.180625 - q * q
    num = _poly(PPND16_A, r)
    den = _poly((1.0,) + PPND16_B, r)
    np.copyto(out, q * num / den, where=core)

    tail = ~core
    if np.any(tail):
        pt = np.where(q < 0.0, p, 1.0 - p)
        with np.errstate(divide="ignore", invalid="ignore"):
            rt = np.sqrt(-np.log(np.where(tail, pt, 0.5)))
        near = rt <= 5.0
        r1 = rt - 1.6
        v1 = _poly(PPND16_C, r1) / _poly((1.0,) + PPND16_D, r1)
        r2 = rt - 5.0
        v2 = _poly(PPND16_E, r2) / _poly((1.0,) + PPND16_F, r2)
        val = np.where(near, v1, v2)
        val = np.where(q < 0.0, -val, val)
        np.copyto(out, val, where=tail)
    return out


def bits_to_normal(bits: np.ndarray) -> np.ndarray:
    return ppnd16(bits_to_uniform(bits))


def bits_to_uniform_scaled(bits: np.ndarray) -> np.ndarray:
    """Uniform on (-sqrt(3), sqrt(3)): symmetric, unit variance."""
    return np.sqrt(3.0) * (2.0 * bits_to_uniform(bits) - 1.0)


# ---------------------------------------------------------------------------
# Matrix-free conjugate gradients.
#
# Hand-rolled rather than scipy's so the Neumann solves can re-project onto
# the mean-zero subspace every iteration and iteration behavior stays fully
# deterministic.

class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance within the cap."""


def conjugate_gradient(apply_op, b, tol, max_iter=None, project=None):
    """Solve ``apply_op(x) = b`` for SPD ``apply_op`` on ndarray states.

    Terminates when ``||r||_2 <= tol * ||b||_2``.  ``project``, when given,
    is applied to b, to every iterate and to every residual (used to stay
    on the mean-zero subspace of singular Neumann operators).
    """
    b = np.asarray(b, dtype=np.float64)
    if project is not None:
        b = project(b)
    norm_b = float(np.linalg.norm(b))
    x = np.zeros_like(b)
    if norm_b == 0.0:
        return x, 0
    if max_iter is None:
        max_iter = max(200, 40 * int(np.ceil(np.sqrt(b.size))))
    r = b.copy()
    p = r.copy()
    rs = float(np.dot(r.ravel(), r.ravel()))
    threshold = tol * norm_b
    for k in range(max_iter):
        if np.sqrt(rs) <= threshold:
            return x, k
        ap = apply_op(p)
        alpha = rs / float(np.dot(p.ravel(), ap.ravel()))
        x = x + alpha * p
        r = r - alpha * ap
        if project is not None:
            x = project(x)
            r = project(r)
        rs_new = float(np.dot(r.ravel(), r.ravel()))
        p = r + (rs_new / rs) * p
        rs = rs_new
    if np.sqrt(rs) <= threshold:
        return x, max_iter
    raise ConvergenceError(
        f"conjugate gradients: residual {np.sqrt(rs):.3e} above "
        f"{threshold:.3e} after {max_iter} iterations"
    )
