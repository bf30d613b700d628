"""Time-dependent master-equation coefficients.

Each coefficient is int_0^t ds K_i(s) G(-s), where K_i is the noise kernel of
channel i (1: transverse, 0: longitudinal) and G one of the Heisenberg
coefficient functions X, Y, Z of that channel. Row order everywhere is
``COEFF_NAMES``.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .core import QubitParams
from .kernels import DeltaNoise, NoiseModel

COEFF_NAMES = ("dxx", "fxy", "fxz", "fzx", "fzy", "dzz")
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
MIN_TABLE_POINTS = 64
TABLE_POINTS_PER_CYCLE = 4096

# Gauss-Legendre rule used for panel increments when building tables
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)
# leading panels integrated adaptively when the kernel is log-singular at s = 0
_SINGULAR_GUARD = 4


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class HeisenbergCoeffs:
    x1: float
    y1: float
    z1: float
    x0: float
    y0: float
    z0: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.z1, self.x0, self.y0, self.z0])


@dataclass(frozen=True)
class DiffusionCoeffs:
    dxx: float = 0.0
    fxy: float = 0.0
    fxz: float = 0.0
    fzx: float = 0.0
    fzy: float = 0.0
    dzz: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.dxx, self.fxy, self.fxz, self.fzx, self.fzy, self.dzz])

    @classmethod
    def from_array(cls, a) -> "DiffusionCoeffs":
        return cls(*(float(v) for v in a))


def heisenberg_arrays(p: QubitParams, t) -> np.ndarray:
    """Rows X1, Y1, Z1, X0, Y0, Z0 evaluated at ``t`` (any shape)."""
    om, de = p.omega, p.delta
    e2 = om * om + de * de
    e = math.sqrt(e2)
    arg = 2.0 * np.asarray(t, dtype=float) * e
    c, s = np.cos(arg), np.sin(arg)
    x1 = (om * om + de * de * c) / e2
    y1 = de * s / e
    z1 = de * om * (1.0 - c) / e2
    y0 = -om * s / e
    z0 = 1.0 - om * om * (1.0 - c) / e2
    return np.stack([x1, y1, z1, z1, y0, z0])


def heisenberg_functions(p: QubitParams, t: float) -> HeisenbergCoeffs:
    return HeisenbergCoeffs(*(float(v) for v in heisenberg_arrays(p, t)))


def _delta_constants(n: DeltaNoise) -> np.ndarray:
    return np.array([n.gamma1 * n.kBT, 0.0, 0.0, 0.0, 0.0, n.gamma0 * n.kBT])


def _integrands(p: QubitParams, n: NoiseModel):
    """Six scalar integrands s -> K_i(s) G(-s)."""

    def make(row):
        kernel = n.kernel1 if row < 3 else n.kernel0

        def f(s):
            return kernel(s) * heisenberg_arrays(p, -s)[row]

        return f

    return [make(r) for r in range(6)]


def _quad(f, a, b, label):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=500)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"{label} on [{a!r}, {b!r}]: {exc}") from exc
    return val


def diffusion_coefficients(p: QubitParams, n: NoiseModel, t: float) -> DiffusionCoeffs:
    """Coefficients at time ``t`` by direct adaptive quadrature."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    if isinstance(n, DeltaNoise):
        return DiffusionCoeffs.from_array(_delta_constants(n))
    if t == 0 or n.is_noiseless:
        return DiffusionCoeffs()
    vals = [_quad(f, 0.0, t, name) for f, name in zip(_integrands(p, n), COEFF_NAMES)]
    return DiffusionCoeffs(*vals)


class CoeffTable:
    """Cubic-spline table of the six coefficients on a uniform grid.

    For a kernel with a log singularity at s = 0 the spline carries only the
    remainder after subtracting the closed-form integral of the singular part,
    which a cubic cannot follow near t = 0.
    """

    def __init__(self, p: QubitParams, n: NoiseModel, times: np.ndarray, values: np.ndarray):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or np.any(np.diff(times) <= 0):
            raise ValueError("table grid must be strictly increasing")
        self.params = p
        self.noise = n
        self.times = times
        self.values = values
        self.order = 3
        self._constant = isinstance(n, DeltaNoise) or n.is_noiseless
        self._singular = getattr(n, "singular_at_zero", False) and not self._constant
        if not self._constant:
            self._spline = CubicSpline(times, values - self._log_part(times), axis=1)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t) -> np.ndarray:
        """Coefficient rows at ``t``; shape (6,) for scalar t, else (6, N)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_end * (1 + 1e-12)):
            raise ValueError(f"t outside table range [0, {self.t_end!r}]")
        if self._constant:
            col = self.values[:, 0].reshape((6,) + (1,) * t.ndim)
            return np.broadcast_to(col, (6,) + t.shape).copy()
        return self._spline(t) + self._log_part(t)

    def _log_part(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if not self._singular:
            return np.zeros((6,) + t.shape)
        return _log_singular_part(self.params, self.noise, t)

    def coeffs_at(self, t: float) -> DiffusionCoeffs:
        return DiffusionCoeffs.from_array(self(t))

    def to_csv(self, path) -> None:
        from .io import write_csv

        rows = np.column_stack([self.times, self.values.T])
        write_csv(path, ("t",) + COEFF_NAMES, rows)


def _log_singular_part(p: QubitParams, n, t) -> np.ndarray:
    """int_0^t -gamma lam ln(s) G(-s) ds with G(-s) expanded to second order."""
    om, de = p.omega, p.delta
    # Taylor coefficients of G(-s) in powers of s, rows as COEFF_NAMES
    taylor = np.array(
        [
            [1.0, 0.0, -2.0 * de * de],
            [0.0, -2.0 * de, 0.0],
            [0.0, 0.0, 2.0 * de * om],
            [0.0, 0.0, 2.0 * de * om],
            [0.0, 2.0 * om, 0.0],
            [1.0, 0.0, -2.0 * om * om],
        ]
    )
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logt = np.where(t > 0, np.log(np.where(t > 0, t, 1.0)), 0.0)
    moments = np.stack(
        [t ** (m + 1) * (logt / (m + 1) - 1.0 / (m + 1) ** 2) for m in range(3)]
    )
    return -n.gamma * n.lam * np.tensordot(taylor, moments, axes=(1, 0))


def _panel_increments(p: QubitParams, n: NoiseModel, times: np.ndarray) -> np.ndarray:
    """int over each [t_j, t_j+1] of the six integrands, shape (6, len-1)."""
    a, b = times[:-1], times[1:]
    h = b - a
    # sub-panels resolve both the drive oscillation and narrow Gaussian kernels
    scales = [0.25 / p.splitting]
    for name in ("alpha0", "alpha1"):
        if hasattr(n, name):
            scales.append(0.5 / getattr(n, name))
    if hasattr(n, "lam"):
        scales.append(0.5 / n.lam)
    nsub = max(1, int(math.ceil(np.max(h) / min(scales))))
    sub = np.linspace(0.0, 1.0, nsub + 1)
    out = np.zeros((6, len(a)))
    for k in range(nsub):
        lo = a + h * sub[k]
        hi = a + h * sub[k + 1]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        s = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        g = heisenberg_arrays(p, -s)
        k1 = np.asarray(n.kernel1(s))
        k0 = np.asarray(n.kernel0(s))
        w = half[:, None] * _GL_WEIGHTS[None, :]
        out[:3] += np.sum(g[:3] * k1 * w, axis=-1)
        out[3:] += np.sum(g[3:] * k0 * w, axis=-1)
    return out


def build_coeff_table(p: QubitParams, n: NoiseModel, t_end: float, npts: int) -> CoeffTable:
    """Tabulate the coefficients on ``npts`` uniform points over [0, t_end]."""
    if npts < MIN_TABLE_POINTS:
        raise ValueError(f"npts must be >= {MIN_TABLE_POINTS}, got {npts}")
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end!r}")
    times = np.linspace(0.0, t_end, npts)
    if isinstance(n, DeltaNoise):
        values = np.repeat(_delta_constants(n)[:, None], npts, axis=1)
        return CoeffTable(p, n, times, values)
    if n.is_noiseless:
        return CoeffTable(p, n, times, np.zeros((6, npts)))

    if getattr(n, "singular_at_zero", False):
        nguard = min(_SINGULAR_GUARD + 1, npts - 1)
        incr = np.zeros((6, npts - 1))
        funcs = _integrands(p, n)
        for j in range(nguard):
            for r in range(6):
                incr[r, j] = _quad(funcs[r], times[j], times[j + 1], COEFF_NAMES[r])
        incr[:, nguard:] = _panel_increments(p, n, times[nguard:])
    else:
        incr = _panel_increments(p, n, times)
    values = np.concatenate([np.zeros((6, 1)), np.cumsum(incr, axis=1)], axis=1)
    return CoeffTable(p, n, times, values)


def default_table_points(p: QubitParams, t_end: float) -> int:
    return max(MIN_TABLE_POINTS, int(math.ceil(TABLE_POINTS_PER_CYCLE * t_end / p.period)) + 1)
