"""Integration of the qubit master equation.

drho/dt = -i[H, rho] - sum_ab c_ab(t) [sigma_a, [sigma_b, rho]]

with the six (a, b) pairs of ``COEFF_NAMES``. Two equivalent code paths are
provided: the Bloch form dR/dt = A(t) R (default, fast) and the 2x2 matrix
form built from explicit commutators.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math
from typing import Optional

import numba
import numpy as np
from scipy.integrate import solve_ivp

from .core import (
    HERMITIAN_TOL,
    NEG_EIG_TOL,
    TRACE_TOL,
    DensityMatrix,
    IntegrationError,
    InvalidStateError,
    QubitParams,
    SX,
    SY,
    SZ,
    bloch_to_matrix,
    commutator,
    eigh_2x2,
    matrix_to_bloch,
)
from .dissipators import (
    COEFF_NAMES,
    CoeffTable,
    DiffusionCoeffs,
    build_coeff_table,
    default_table_points,
    diffusion_coefficients,
)
from .kernels import NoiseModel

DEFAULT_STEPS_PER_CYCLE = 10_000
METHODS = ("rk4", "rk45")
FORMS = ("bloch", "matrix")

# (a, b) Pauli pairs of the double commutators, in COEFF_NAMES order
_PAIRS = ((SX, SX), (SX, SY), (SX, SZ), (SZ, SX), (SZ, SY), (SZ, SZ))


@dataclass(frozen=True)
class EvolveConfig:
    """Integration settings.

    ``dt`` is the fixed RK4 step; it is shrunk slightly so that an integer
    number of steps lands on ``t_end``. For ``method="rk45"`` the step is
    adaptive and ``dt`` only sets the output sampling grid.
    """

    t_end: float
    dt: float
    sample_every: int = 1
    use_table: bool = True
    method: str = "rk4"
    form: str = "bloch"
    rtol: float = 1e-10
    table_npts: Optional[int] = None
    positivity_tol: float = NEG_EIG_TOL

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be > 0, got {self.t_end!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError(f"sample_every must be an integer >= 1, got {self.sample_every!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")
        if not self.positivity_tol > 0:
            raise ValueError(f"positivity_tol must be > 0, got {self.positivity_tol!r}")

    @classmethod
    def cycles(cls, p: QubitParams, n_cycles: float = 1.0,
               steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE, **kw) -> "EvolveConfig":
        return cls(t_end=n_cycles * p.period, dt=p.period / steps_per_cycle, **kw)

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-sampled states. ``rho`` has shape (N, 2, 2), ``times`` shape (N,).

    The master equation does not preserve positivity, so states may carry
    eigenvalues down to ``-positivity_tol``; ``min_eigenvalue`` reports the
    worst one.
    """

    times: np.ndarray
    rho: np.ndarray = field(repr=False)
    params: QubitParams
    noise: NoiseModel
    positivity_tol: float = NEG_EIG_TOL

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        rho = np.asarray(self.rho, dtype=complex)
        if times.ndim != 1 or rho.shape != (len(times), 2, 2):
            raise ValueError("times and rho have mismatched shapes")
        if times[0] != 0 or np.any(np.diff(times) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        check_states(rho, times, self.positivity_tol)
        times.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rho", rho)

    def __len__(self):
        return len(self.times)

    @property
    def bloch(self) -> np.ndarray:
        return matrix_to_bloch(self.rho)

    @property
    def purity(self) -> np.ndarray:
        r = self.bloch
        return 0.5 * (1.0 + np.sum(r * r, axis=-1))

    def state(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.rho[i])

    @property
    def states(self):
        return [DensityMatrix(m) for m in self.rho]

    @property
    def min_eigenvalue(self) -> float:
        return float(np.min(eigh_2x2(self.rho)[0][:, 1]))

    @property
    def final_bloch(self) -> np.ndarray:
        return self.bloch[-1]

    def to_csv(self, path):
        from .io import write_csv

        r = self.bloch
        eps, _, _ = eigh_2x2(self.rho)
        rows = np.column_stack([self.times, r, self.purity, eps])
        return write_csv(path, ("t", "rx", "ry", "rz", "purity", "eps1", "eps2"), rows)


def check_states(rho: np.ndarray, times: np.ndarray, neg_tol: float = NEG_EIG_TOL) -> None:
    """Raise IntegrationError at the first sample violating state invariants."""
    herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))), axis=(-1, -2))
    tr = np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0)
    eps, _, _ = eigh_2x2(rho)
    bad = (herm > HERMITIAN_TOL) | (tr > TRACE_TOL) | (eps[:, 1] < -neg_tol) | ~np.isfinite(tr)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise IntegrationError(
            f"state invariant violated: hermiticity {herm[i]:.2e}, "
            f"trace error {tr[i]:.2e}, min eigenvalue {eps[i, 1]:.2e}",
            t=float(times[i]),
        )


def master_rhs(p: QubitParams, c: DiffusionCoeffs, rho) -> np.ndarray:
    """Right-hand side of the master equation for a 2x2 density matrix."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    out = -1j * commutator(p.hamiltonian(), m)
    for coef, (sa, sb) in zip(c.as_array(), _PAIRS):
        if coef != 0.0:
            out = out - coef * commutator(sa, commutator(sb, m))
    return out


def bloch_generator(p: QubitParams, coeffs) -> np.ndarray:
    """Matrix A with dR/dt = A R; ``coeffs`` is DiffusionCoeffs or shape (6, ...)."""
    if isinstance(coeffs, DiffusionCoeffs):
        coeffs = coeffs.as_array()
    c = np.asarray(coeffs, dtype=float)
    dxx, fxy, fxz, fzx, fzy, dzz = c
    shape = c.shape[1:]
    a = np.zeros(shape + (3, 3))
    om, de = p.omega, p.delta
    a[..., 0, 1] = -de
    a[..., 1, 0] = de
    a[..., 1, 2] = -om
    a[..., 2, 1] = om
    a[..., 0, 0] = -4.0 * dzz
    a[..., 1, 1] = -4.0 * (dxx + dzz)
    a[..., 2, 2] = -4.0 * dxx
    a[..., 1, 0] += 4.0 * fxy
    a[..., 2, 0] += 4.0 * fxz
    a[..., 0, 2] += 4.0 * fzx
    a[..., 1, 2] += 4.0 * fzy
    return a


def _coeff_source(p, n, cfg, table):
    if not cfg.use_table:
        def direct(t):
            t = np.atleast_1d(t)
            return np.stack([diffusion_coefficients(p, n, float(x)).as_array() for x in t], axis=1)
        return direct
    if table is None:
        npts = cfg.table_npts or default_table_points(p, cfg.t_end)
        table = build_coeff_table(p, n, cfg.t_end, npts)
    elif table.t_end < cfg.t_end * (1 - 1e-12):
        raise ValueError("coefficient table does not cover t_end")
    return lambda t: table(np.atleast_1d(t))


def _rk4_step_maps(a0, am, a1, dt):
    eye = np.eye(3)
    k1 = a0
    k2 = am @ (eye + 0.5 * dt * k1)
    k3 = am @ (eye + 0.5 * dt * k2)
    k4 = a1 @ (eye + dt * k3)
    return eye + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_bloch(p, coeff_at, r0, n_steps, dt):
    nodes = np.arange(2 * n_steps + 1) * (0.5 * dt)
    gen = bloch_generator(p, coeff_at(nodes))
    maps = _rk4_step_maps(gen[0:-1:2], gen[1::2], gen[2::2], dt)
    out = np.empty((n_steps + 1, 3))
    r = np.array(r0, dtype=float)
    out[0] = r
    for k in range(n_steps):
        r = maps[k] @ r
        out[k + 1] = r
    return out


@numba.njit(cache=True)
def _mm(a, b):
    out = np.empty((2, 2), dtype=np.complex128)
    out[0, 0] = a[0, 0] * b[0, 0] + a[0, 1] * b[1, 0]
    out[0, 1] = a[0, 0] * b[0, 1] + a[0, 1] * b[1, 1]
    out[1, 0] = a[1, 0] * b[0, 0] + a[1, 1] * b[1, 0]
    out[1, 1] = a[1, 0] * b[0, 1] + a[1, 1] * b[1, 1]
    return out


@numba.njit(cache=True)
def _comm(a, b):
    return _mm(a, b) - _mm(b, a)


@numba.njit(cache=True)
def _rhs_matrix(h, pairs, c, m):
    out = -1j * _comm(h, m)
    for k in range(6):
        if c[k] != 0.0:
            out = out - c[k] * _comm(pairs[k, 0], _comm(pairs[k, 1], m))
    return out


@numba.njit(cache=True)
def _rk4_matrix_loop(h, pairs, coeffs, rho0, dt):
    n_steps = (coeffs.shape[1] - 1) // 2
    out = np.empty((n_steps + 1, 2, 2), dtype=np.complex128)
    m = rho0.copy()
    out[0] = m
    for k in range(n_steps):
        c0 = coeffs[:, 2 * k]
        cm = coeffs[:, 2 * k + 1]
        c1 = coeffs[:, 2 * k + 2]
        k1 = _rhs_matrix(h, pairs, c0, m)
        k2 = _rhs_matrix(h, pairs, cm, m + 0.5 * dt * k1)
        k3 = _rhs_matrix(h, pairs, cm, m + 0.5 * dt * k2)
        k4 = _rhs_matrix(h, pairs, c1, m + dt * k3)
        m = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = m
    return out


_PAIR_ARRAY = np.array([[a, b] for a, b in _PAIRS], dtype=np.complex128)


def _rk4_matrix(p, coeff_at, rho0, n_steps, dt):
    nodes = np.arange(2 * n_steps + 1) * (0.5 * dt)
    coeffs = np.ascontiguousarray(coeff_at(nodes), dtype=float)
    return _rk4_matrix_loop(p.hamiltonian(), _PAIR_ARRAY, coeffs, np.asarray(rho0, dtype=complex), dt)


def _rk45(p, coeff_at, rho0, cfg, t_eval):
    if cfg.form == "bloch":
        def rhs(t, r):
            return bloch_generator(p, coeff_at(t)[:, 0]) @ r
        y0 = matrix_to_bloch(rho0)
    else:
        def rhs(t, y):
            m = (y[:4] + 1j * y[4:]).reshape(2, 2)
            d = master_rhs(p, DiffusionCoeffs.from_array(coeff_at(t)[:, 0]), m).ravel()
            return np.concatenate([d.real, d.imag])
        y0 = np.concatenate([rho0.real.ravel(), rho0.imag.ravel()])
    sol = solve_ivp(rhs, (0.0, cfg.t_end), y0, method="RK45", t_eval=t_eval,
                    rtol=cfg.rtol, atol=cfg.rtol * 1e-2)
    if not sol.success:
        raise IntegrationError(f"RK45 failed: {sol.message}", t=float(sol.t[-1]))
    if cfg.form == "bloch":
        return bloch_to_matrix(sol.y.T)
    y = sol.y.T
    return (y[:, :4] + 1j * y[:, 4:]).reshape(-1, 2, 2)


def evolve(p: QubitParams, n: NoiseModel, rho0: Optional[DensityMatrix] = None,
           cfg: Optional[EvolveConfig] = None, table: Optional[CoeffTable] = None) -> Trajectory:
    """Integrate the master equation from ``rho0`` (default |0><0|).

    Every step is checked against the state invariants (negative eigenvalues
    down to ``cfg.positivity_tol`` are tolerated); the first violation raises
    IntegrationError carrying the offending time.
    """
    rho0 = DensityMatrix.ground() if rho0 is None else rho0
    cfg = EvolveConfig.cycles(p) if cfg is None else cfg
    coeff_at = _coeff_source(p, n, cfg, table)
    n_steps = cfg.n_steps
    dt = cfg.t_end / n_steps
    step_times = np.arange(n_steps + 1) * dt
    step_times[-1] = cfg.t_end
    idx = np.arange(0, n_steps + 1, cfg.sample_every)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)

    if cfg.method == "rk45":
        rho = _rk45(p, coeff_at, rho0.matrix, cfg, step_times[idx])
        check_states(rho, step_times[idx], cfg.positivity_tol)
        return Trajectory(step_times[idx], rho, p, n, cfg.positivity_tol)

    if cfg.form == "bloch":
        r = _rk4_bloch(p, coeff_at, matrix_to_bloch(rho0.matrix), n_steps, dt)
        norms = np.linalg.norm(r, axis=1)
        bad = ~np.isfinite(norms) | (norms > 1.0 + 2.0 * cfg.positivity_tol)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise IntegrationError(f"Bloch vector left the unit ball (|R| = {norms[i]!r})",
                                   t=float(step_times[i]))
        rho = bloch_to_matrix(r[idx])
    else:
        rho_all = _rk4_matrix(p, coeff_at, rho0.matrix, n_steps, dt)
        check_states(rho_all, step_times, cfg.positivity_tol)
        rho = rho_all[idx]
    return Trajectory(step_times[idx], rho, p, n, cfg.positivity_tol)


def step_norms(p: QubitParams, n: NoiseModel, rho0: Optional[DensityMatrix] = None,
               cfg: Optional[EvolveConfig] = None) -> np.ndarray:
    """|R| at every accepted RK4 step (ignores ``sample_every``)."""
    cfg = EvolveConfig.cycles(p) if cfg is None else cfg
    return np.linalg.norm(evolve(p, n, rho0, replace(cfg, sample_every=1, method="rk4")).bloch, axis=1)

