"""Compiled inner loops for the Euler-Maruyama sampler.

Everything here is compiled with strict IEEE float semantics (no
fastmath), so trajectories are bitwise reproducible and independent of
thread count.  The per-site gaussian increments reproduce the key
derivation of ``_numerics`` exactly: 64 mixed bits from
``mix13(site_key ^ draw)``, top 53 bits to a uniform, then the AS 241
rational approximation of the normal quantile.

The sine used by the cosine-perturbed potential is evaluated with the
classic argument-reduction-plus-minimax-polynomial scheme of the C math
library, accurate to about one ulp on the argument range produced by
stable dynamics.  The reduction is branchless so the compiler can
vectorize the fused difference-plus-V' pass, and the normal draw is
split into a branch-free central pass plus a second pass that rewrites
the rare tail entries, for the same reason.

Set ``RFSURF_NO_NUMBA=1`` to disable compilation; callers then fall back
to the vectorized numpy path, which evaluates the same formulas (libm
rounding may differ in the last ulp).
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["HAVE_NUMBA", "euler_step", "gradient_flux",
           "cosine_prime_inplace"]


def _numba_enabled() -> bool:
    if os.environ.get("RFSURF_NO_NUMBA", "").lower() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


HAVE_NUMBA = _numba_enabled()

# sin minimax coefficients and the split representation of pi/2
_S1 = -1.66666666666666324348e-01
_S2 = 8.33333333332248946124e-03
_S3 = -1.98412698298579493134e-04
_S4 = 2.75573137070700676789e-06
_S5 = -2.50507602534068634195e-08
_S6 = 1.58969099521155010221e-10
_C1 = 4.16666666666666019037e-02
_C2 = -1.38888888888741095749e-03
_C3 = 2.48015872894767294178e-05
_C4 = -2.75573143513906633035e-07
_C5 = 2.08757232129817482790e-09
_C6 = -1.13596475577881948265e-11
_PIO2_HI = 1.57079632679489655800e+00
_PIO2_LO = 6.12323399573676603587e-17
_TWO_OVER_PI = 0.636619772367581343076

_U53 = 1.1102230246251565e-16  # 2**-53

_A0 = 3.3871328727963666080e0
_A1 = 1.3314166789178437745e2
_A2 = 1.9715909503065514427e3
_A3 = 1.3731693765509461125e4
_A4 = 4.5921953931549871457e4
_A5 = 6.7265770927008700853e4
_A6 = 3.3430575583588128105e4
_A7 = 2.5090809287301226727e3
_B1 = 4.2313330701600911252e1
_B2 = 6.8718700749205790830e2
_B3 = 5.3941960214247511077e3
_B4 = 2.1213794301586595867e4
_B5 = 3.9307895800092710610e4
_B6 = 2.8729085735721942674e4
_B7 = 5.2264952788528545610e3
_C0 = 1.42343711074968357734e0
_Cc1 = 4.63033784615654529590e0
_Cc2 = 5.76949722146069140550e0
_Cc3 = 3.64784832476320460504e0
_Cc4 = 1.27045825245236838258e0
_Cc5 = 2.41780725177450611770e-1
_Cc6 = 2.27238449892691845833e-2
_Cc7 = 7.74545014278341407640e-4
_D1 = 2.05319162663775882187e0
_D2 = 1.67638483018380384940e0
_D3 = 6.89767334985100004550e-1
_D4 = 1.48103976427480074590e-1
_D5 = 1.51986665636164571966e-2
_D6 = 5.47593808499534494600e-4
_D7 = 1.05075007164441684324e-9
_E0 = 6.65790464350110377720e0
_E1 = 5.46378491116411436990e0
_E2 = 1.78482653991729133580e0
_E3 = 2.96560571828504891230e-1
_E4 = 2.65321895265761230930e-2
_E5 = 1.24266094738807843860e-3
_E6 = 2.71155556874348757815e-5
_E7 = 2.01033439929228813265e-7
_F1 = 5.99832206555887937690e-1
_F2 = 1.36929880922735805310e-1
_F3 = 1.48753612908506148525e-2
_F4 = 7.86869131145613259100e-4
_F5 = 1.84631831751005468180e-5
_F6 = 1.42151175831644588870e-7
_F7 = 2.04426310338993978564e-15


if HAVE_NUMBA:
    from numba import njit

    @njit(inline="always", cache=True)
    def _sin(x):
        # branchless reduction modulo pi/2, quadrant blended by parity
        n = round(x * _TWO_OVER_PI)
        r = (x - n * _PIO2_HI) - n * _PIO2_LO
        q = int(n)
        z = r * r
        ks = r + r * z * (_S1 + z * (_S2 + z * (_S3 + z * (
            _S4 + z * (_S5 + z * _S6)))))
        kc = 1.0 - 0.5 * z + z * z * (_C1 + z * (_C2 + z * (_C3 + z * (
            _C4 + z * (_C5 + z * _C6)))))
        odd = float(q & 1)
        sign = 1.0 - float(q & 2)
        return sign * ((1.0 - odd) * ks + odd * kc)

    @njit(cache=True)
    def cosine_prime_inplace(flat, kappa):
        # in-place keeps the loop a pure map, which vectorizes
        for i in range(flat.size):
            g = flat[i]
            flat[i] = g - kappa * _sin(g)

    @njit(cache=True)
    def gradient_flux(phi, flux, strides, kappa):
        """Forward differences of the flat cube, V' applied when kappa != 0.

        Row a of ``flux`` gets phi[j + strides[a]] - phi[j] for
        j < n - strides[a]; entries whose multi-index wraps across a row
        are written too but never read back (the update only touches
        interior sites, whose incident edges never wrap).
        """
        n = phi.size
        for a in range(strides.size):
            s = strides[a]
            row = flux[a]
            if kappa != 0.0:
                for j in range(n - s):
                    g = phi[j + s] - phi[j]
                    row[j] = g - kappa * _sin(g)
            else:
                for j in range(n - s):
                    row[j] = phi[j + s] - phi[j]

    @njit(inline="always", cache=True)
    def _mix13(z):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    @njit(inline="always", cache=True)
    def _quantile(p):
        q = p - 0.5
        if abs(q) <= 0.425:
            r = 0.180625 - q * q
            num = ((((((_A7 * r + _A6) * r + _A5) * r + _A4) * r + _A3)
                    * r + _A2) * r + _A1) * r + _A0
            den = ((((((_B7 * r + _B6) * r + _B5) * r + _B4) * r + _B3)
                    * r + _B2) * r + _B1) * r + 1.0
            return q * num / den
        r = p if q < 0.0 else 1.0 - p
        r = math.sqrt(-math.log(r))
        if r <= 5.0:
            r = r - 1.6
            num = ((((((_Cc7 * r + _Cc6) * r + _Cc5) * r + _Cc4) * r + _Cc3)
                    * r + _Cc2) * r + _Cc1) * r + _C0
            den = ((((((_D7 * r + _D6) * r + _D5) * r + _D4) * r + _D3)
                    * r + _D2) * r + _D1) * r + 1.0
        else:
            r = r - 5.0
            num = ((((((_E7 * r + _E6) * r + _E5) * r + _E4) * r + _E3)
                    * r + _E2) * r + _E1) * r + _E0
            den = ((((((_F7 * r + _F6) * r + _F5) * r + _F4) * r + _F3)
                    * r + _F2) * r + _F1) * r + 1.0
        val = num / den
        return -val if q < 0.0 else val

    @njit(inline="always", cache=True)
    def _tail_quantile(p, q):
        r = p if q < 0.0 else 1.0 - p
        r = math.sqrt(-math.log(r))
        if r <= 5.0:
            r = r - 1.6
            num = ((((((_Cc7 * r + _Cc6) * r + _Cc5) * r + _Cc4) * r + _Cc3)
                    * r + _Cc2) * r + _Cc1) * r + _C0
            den = ((((((_D7 * r + _D6) * r + _D5) * r + _D4) * r + _D3)
                    * r + _D2) * r + _D1) * r + 1.0
        else:
            r = r - 5.0
            num = ((((((_E7 * r + _E6) * r + _E5) * r + _E4) * r + _E3)
                    * r + _E2) * r + _E1) * r + _E0
            den = ((((((_F7 * r + _F6) * r + _F5) * r + _F4) * r + _F3)
                    * r + _F2) * r + _F1) * r + 1.0
        val = num / den
        return -val if q < 0.0 else val

    @njit(cache=True)
    def _draw_normals(keys, draw, u, z):
        # three separate branch-free-or-rare loops: the integer hash and
        # the float rational approximation each vectorize on their own
        # but not fused; the central approximation is garbage outside
        # |q| <= 0.425 and the last loop overwrites exactly those
        # entries with the tail expansions
        for k in range(keys.size):
            bits = _mix13(keys[k] ^ draw)
            u[k] = (float(bits >> np.uint64(11)) + 0.5) * _U53
        for k in range(u.size):
            q = u[k] - 0.5
            r = 0.180625 - q * q
            num = ((((((_A7 * r + _A6) * r + _A5) * r + _A4) * r + _A3)
                    * r + _A2) * r + _A1) * r + _A0
            den = ((((((_B7 * r + _B6) * r + _B5) * r + _B4) * r + _B3)
                    * r + _B2) * r + _B1) * r + 1.0
            z[k] = q * num / den
        for k in range(u.size):
            q = u[k] - 0.5
            if abs(q) > 0.425:
                z[k] = _tail_quantile(u[k], q)

    @njit(cache=True)
    def _apply_update(phi, out, flux, eta, z, idx, strides,
                      dt, lam, noise_scale, acc1, acc2, accumulate):
        d = strides.size
        for k in range(idx.size):
            j = idx[k]
            drift = lam * eta[k]
            for a in range(d):
                drift += flux[a, j] - flux[a, j - strides[a]]
            value = phi[j] + dt * drift + noise_scale * z[k]
            out[j] = value
            if accumulate != 0:
                mid = 0.5 * (phi[j] + value)
                acc1[k] += mid
                acc2[k] += mid * mid

    def euler_step(phi, out, flux, eta, keys, idx, strides, draw,
                   dt, lam, noise_scale, u, z, acc1, acc2, accumulate):
        """One synchronous update of the interior sites, flat layout.

        ``flux`` holds V' of the forward differences, one row per axis;
        ``idx`` the flat indices of the interior sites and ``eta``,
        ``keys``, ``u``, ``z``, ``acc1``, ``acc2`` their compressed
        companions; ``strides[a]`` is the flat offset of a step along
        axis a.  When ``accumulate`` is nonzero the midpoint of the
        transition is added to the running first and second moment
        arrays (midpoints of the Euler chain average to the exact
        stationary mean and variance of the quadratic model).
        """
        _draw_normals(keys, draw, u, z)
        _apply_update(phi, out, flux, eta, z, idx, strides,
                      dt, lam, noise_scale, acc1, acc2, accumulate)
else:
    def cosine_prime_inplace(flat, kappa):  # numpy fallback
        np.subtract(flat, kappa * np.sin(flat), out=flat)

    def gradient_flux(phi, flux, strides, kappa):
        """Vectorized reference for the fused difference-plus-V' pass."""
        n = phi.size
        for a in range(strides.size):
            s = int(strides[a])
            np.subtract(phi[s:], phi[:n - s], out=flux[a, :n - s])
            if kappa != 0.0:
                row = flux[a, :n - s]
                np.subtract(row, kappa * np.sin(row), out=row)

    def euler_step(phi, out, flux, eta, keys, idx, strides, draw,
                   dt, lam, noise_scale, u, z, acc1, acc2, accumulate):
        """Vectorized reference implementation of the compiled step."""
        from . import _numerics as nx

        d = strides.size
        drift = lam * eta
        for a in range(d):
            drift = drift + (flux[a, idx] - flux[a, idx - strides[a]])
        bits = nx.mix13(keys ^ draw)
        xi = nx.bits_to_normal(bits)
        value = phi[idx] + dt * drift + noise_scale * xi
        out[idx] = value
        if accumulate:
            mid = 0.5 * (phi[idx] + value)
            acc1 += mid
            acc2 += mid * mid
