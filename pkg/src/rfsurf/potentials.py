"""Uniformly convex even interaction potentials acting on gradients.

Every potential carries certified curvature bounds
``0 < c_minus <= V'' <= c_plus < inf``.  Two built-in families cover the
experiments: the exactly solvable quadratic ``t**2 / 2`` and the
quadratic-plus-cosine ``t**2 / 2 + kappa * cos(t)`` with ``0 <= kappa < 1``,
whose curvature oscillates inside ``[1 - kappa, 1 + kappa]``.

``averaged_environment`` returns the second derivative averaged along the
segment between two gradient values, the elliptic coefficient felt by the
difference of two coupled interfaces.  It always lies in
``[c_minus, c_plus]``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.integrate import quad


class Potential:
    """Base class; subclasses provide value/prime/second and the bounds."""

    family: str
    c_minus: float
    c_plus: float

    def value(self, t):
        raise NotImplementedError

    def prime(self, t):
        raise NotImplementedError

    def second(self, t):
        raise NotImplementedError

    def averaged_environment(self, g0, g1):
        """``int_0^1 V''(s * g0 + (1 - s) * g1) ds``, elementwise."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class Quadratic(Potential):
    """``V(t) = t**2 / 2``; the model it generates is exactly Gaussian."""

    family = "quadratic"
    c_minus = 1.0
    c_plus = 1.0

    def value(self, t):
        t = np.asarray(t, dtype=np.float64)
        return 0.5 * t * t

    def prime(self, t):
        return np.asarray(t, dtype=np.float64) + 0.0

    def second(self, t):
        return np.ones_like(np.asarray(t, dtype=np.float64))

    def averaged_environment(self, g0, g1):
        g0 = np.asarray(g0, dtype=np.float64)
        g1 = np.asarray(g1, dtype=np.float64)
        return np.ones(np.broadcast(g0, g1).shape)


class QuadraticCosine(Potential):
    """``V(t) = t**2 / 2 + kappa * cos(t)`` with ``0 <= kappa < 1``."""

    family = "quadratic_cosine"

    def __init__(self, kappa: float):
        kappa = float(kappa)
        if not 0.0 <= kappa < 1.0:
            raise ValueError(f"kappa must lie in [0, 1), got {kappa}")
        self.kappa = kappa
        self.c_minus = 1.0 - kappa
        self.c_plus = 1.0 + kappa

    def __repr__(self) -> str:
        return f"QuadraticCosine(kappa={self.kappa})"

    def value(self, t):
        t = np.asarray(t, dtype=np.float64)
        return 0.5 * t * t + self.kappa * np.cos(t)

    def prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        return t - self.kappa * np.sin(t)

    def second(self, t):
        t = np.asarray(t, dtype=np.float64)
        return 1.0 - self.kappa * np.cos(t)

    def averaged_environment(self, g0, g1):
        # int_0^1 V''(s g0 + (1-s) g1) ds = 1 - kappa (sin g0 - sin g1)/(g0 - g1)
        # = 1 - kappa cos((g0+g1)/2) * sin(h)/h with h = (g0-g1)/2, which is
        # the analytic limit 1 - kappa cos(g0) when the interval degenerates.
        g0 = np.asarray(g0, dtype=np.float64)
        g1 = np.asarray(g1, dtype=np.float64)
        h = 0.5 * (g0 - g1)
        mid = 0.5 * (g0 + g1)
        return 1.0 - self.kappa * np.cos(mid) * np.sinc(h / np.pi)


class UserPotential(Potential):
    """User-supplied potential with self-declared curvature bounds.

    The declared ``(c_minus, c_plus)`` and evenness are spot-checked on a
    grid at construction; violations raise ``ValueError``.  The averaged
    environment falls back to adaptive quadrature.
    """

    family = "user"

    _GRID = np.concatenate([np.linspace(-50.0, 50.0, 2001), np.linspace(-1.0, 1.0, 401)])

    def __init__(
        self,
        value_fn: Callable,
        prime_fn: Callable,
        second_fn: Callable,
        c_minus: float,
        c_plus: float,
    ):
        if not 0.0 < c_minus <= c_plus < np.inf:
            raise ValueError(f"need 0 < c_minus <= c_plus < inf, got ({c_minus}, {c_plus})")
        self._value = value_fn
        self._prime = prime_fn
        self._second = second_fn
        self.c_minus = float(c_minus)
        self.c_plus = float(c_plus)
        self._spot_check()

    def _spot_check(self) -> None:
        t = self._GRID
        second = np.asarray([self._second(v) for v in t], dtype=np.float64)
        if np.any(second < self.c_minus - 1e-9) or np.any(second > self.c_plus + 1e-9):
            raise ValueError("declared curvature bounds violated on the check grid")
        val = np.asarray([self._value(v) for v in t], dtype=np.float64)
        mirrored = np.asarray([self._value(-v) for v in t], dtype=np.float64)
        scale = 1.0 + np.max(np.abs(val))
        if np.max(np.abs(val - mirrored)) > 1e-9 * scale:
            raise ValueError("potential is not even on the check grid")

    def value(self, t):
        return self._vectorize(self._value, t)

    def prime(self, t):
        return self._vectorize(self._prime, t)

    def second(self, t):
        return self._vectorize(self._second, t)

    @staticmethod
    def _vectorize(fn, t):
        arr = np.asarray(t, dtype=np.float64)
        if arr.ndim == 0:
            return np.float64(fn(float(arr)))
        out = np.empty_like(arr)
        flat = arr.ravel()
        res = out.ravel()
        for i in range(flat.size):
            res[i] = fn(float(flat[i]))
        return out

    def averaged_environment(self, g0, g1):
        g0a, g1a = np.broadcast_arrays(
            np.asarray(g0, dtype=np.float64), np.asarray(g1, dtype=np.float64)
        )
        out = np.empty(g0a.shape)
        flat, af, cf = out.ravel(), g0a.ravel(), g1a.ravel()
        for i in range(flat.size):
            a, c = float(af[i]), float(cf[i])
            if a == c:
                flat[i] = float(self._second(a))
            else:
                flat[i], _ = quad(
                    lambda s: self._second(s * a + (1.0 - s) * c),
                    0.0, 1.0, epsabs=1e-12, epsrel=1e-12,
                )
        return out if out.ndim else np.float64(flat[0])


def make_potential(family: str, kappa: float | None = None) -> Potential:
    """Build a potential from its config name."""
    if family == "quadratic":
        return Quadratic()
    if family == "quadratic_cosine":
        if kappa is None:
            raise ValueError("quadratic_cosine requires kappa")
        return QuadraticCosine(kappa)
    raise ValueError(f"unknown potential family {family!r}")
