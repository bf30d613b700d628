"""Noise models and their time-domain correlation kernels <dw(0) dw(-s)>.

Channel 0 is the longitudinal (sigma_z) noise, channel 1 the transverse
(sigma_x) noise.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Union

import numpy as np

from .special import sici

ZERO_T = "zero_t"
HIGH_T = "high_t"


def _check_nonneg(**kw):
    for name, v in kw.items():
        if not (math.isfinite(v) and v >= 0):
            raise ValueError(f"{name} must be finite and >= 0, got {v!r}")


def kernel_gaussian(gamma, alpha, s):
    """gamma * exp(-alpha^2 s^2); peak value gamma at s = 0."""
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    s = np.asarray(s, dtype=float)
    out = gamma * np.exp(-(alpha * s) ** 2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DeltaNoise:
    """Delta-correlated (finite-temperature Ohmic) noise.

    Gives constant D_zz = gamma0 kBT and D_xx = gamma1 kBT; no quadrature.
    """

    gamma0: float
    gamma1: float
    kBT: float = 1.0

    kind = "delta"

    def __post_init__(self):
        _check_nonneg(gamma0=self.gamma0, gamma1=self.gamma1, kBT=self.kBT)

    @property
    def is_noiseless(self) -> bool:
        return self.gamma0 == 0 and self.gamma1 == 0


@dataclass(frozen=True)
class GaussianNoise:
    gamma0: float
    gamma1: float
    alpha0: float
    alpha1: float

    kind = "gaussian"
    singular_at_zero = False

    def __post_init__(self):
        _check_nonneg(gamma0=self.gamma0, gamma1=self.gamma1)
        for name in ("alpha0", "alpha1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")

    @property
    def is_noiseless(self) -> bool:
        return self.gamma0 == 0 and self.gamma1 == 0

    def kernel0(self, s):
        return kernel_gaussian(self.gamma0, self.alpha0, s)

    def kernel1(self, s):
        return kernel_gaussian(self.gamma1, self.alpha1, s)


@dataclass(frozen=True)
class OneOverFNoise:
    """1/f noise with infrared cutoff ``lam``, same kernel on both channels.

    ``regime`` is ``"zero_t"`` (kernel -gamma lam Ci(lam s)) or ``"high_t"``
    (kBT gamma lam (-pi s/2 + cos(lam s)/lam + s Si(lam s))).
    """

    gamma: float
    lam: float
    regime: str = ZERO_T
    kBT: float = 0.0

    kind = "one_over_f"

    def __post_init__(self):
        _check_nonneg(gamma=self.gamma, kBT=self.kBT)
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be finite and > 0, got {self.lam!r}")
        if self.regime not in (ZERO_T, HIGH_T):
            raise ValueError(f"regime must be {ZERO_T!r} or {HIGH_T!r}, got {self.regime!r}")

    @property
    def singular_at_zero(self) -> bool:
        return self.regime == ZERO_T and self.gamma != 0

    @property
    def is_noiseless(self) -> bool:
        return self.gamma == 0 or (self.regime == HIGH_T and self.kBT == 0)

    def kernel0(self, s):
        return kernel_oneoverf(self, s)

    kernel1 = kernel0


NoiseModel = Union[DeltaNoise, GaussianNoise, OneOverFNoise]


def kernel_oneoverf(model: OneOverFNoise, s):
    s = np.asarray(s, dtype=float)
    lam, g = model.lam, model.gamma
    if model.regime == ZERO_T:
        if np.any(s <= 0):
            raise ValueError("zero-temperature 1/f kernel is singular at s <= 0")
        _, ci = sici(lam * s)
        out = -g * lam * np.asarray(ci)
    else:
        if np.any(s < 0):
            raise ValueError("1/f kernel is defined for s >= 0")
        si, _ = sici(lam * s)
        out = model.kBT * g * lam * (-0.5 * np.pi * s + np.cos(lam * s) / lam + s * np.asarray(si))
    return float(out) if np.ndim(out) == 0 else out
