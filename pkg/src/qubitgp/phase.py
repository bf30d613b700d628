"""Geometric phase of a (possibly mixed) qubit path.

For eigenvalues eps_k(t) and eigenvectors |psi_k(t)> of rho(t),

    Phi = arg sum_k sqrt(eps_k(0) eps_k(tau)) <psi_k(0)|psi_k(tau)>
              exp(-int_0^tau <psi_k|d/dt psi_k> dt)

The connection term is removed by carrying each eigenvector in the parallel
transport gauge (consecutive overlaps real and positive), which makes the
discrete result independent of the eigenvector phases the eigensolver
happens to return.

Sign convention: ``phi`` is the bare arg above. A counter-clockwise precession
about +z therefore gives a negative ``phi``; ``ratio`` compares magnitudes,
|phi| / (pi (1 - cos theta)).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
import math
from typing import Optional

import numpy as np

from .core import (
    DEGENERATE_TOL,
    NEG_EIG_TOL,
    InvalidStateError,
    QubitParams,
    clamp_eigenvalues,
    eigh_2x2,
)
from .evolver import EvolveConfig, Trajectory, evolve
from .kernels import NoiseModel

MIN_GAP_WARN = 1e-10
CONVERGENCE_TOL = 1e-6


class UndefinedPhaseError(ValueError):
    """The state is degenerate at an endpoint of the path."""


@dataclass(frozen=True)
class GPResult:
    phi: float
    phi_unitary: float
    ratio: float
    min_gap: float
    converged: bool
    degraded: bool = False
    min_eigenvalue: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path):
        from .io import write_json

        return write_json(path, self.as_dict())


def unitary_berry_phase(p: QubitParams) -> float:
    """pi (1 - cos theta), cos theta = delta / sqrt(delta^2 + omega^2)."""
    return math.pi * (1.0 - p.cos_theta)


def track_branches(eps: np.ndarray, vecs: np.ndarray):
    """Reorder eigenpairs so each branch follows maximal overlap in time.

    Returns permuted copies of ``eps`` (N, 2) and ``vecs`` (N, 2, 2) and the
    boolean swap flag applied at every sample.
    """
    a, b = vecs[:-1], vecs[1:]
    # ov[j, k, l] = <v_k(j) | v_l(j+1)>
    ov = np.einsum("jik,jil->jkl", np.conj(a), b)
    p2 = np.abs(ov) ** 2
    cross = (p2[:, 0, 1] + p2[:, 1, 0]) > (p2[:, 0, 0] + p2[:, 1, 1])
    swap = np.concatenate([[False], np.cumsum(cross) % 2 == 1])
    order = np.where(swap[:, None], [1, 0], [0, 1])
    eps_t = np.take_along_axis(eps, order, axis=1)
    vecs_t = np.take_along_axis(vecs, order[:, None, :], axis=2)
    return eps_t, vecs_t, swap


def phase_from_eigensystem(eps: np.ndarray, vecs: np.ndarray, neg_tol: float = NEG_EIG_TOL) -> complex:
    """Branch sum whose argument is the geometric phase.

    ``eps`` (N, 2) and ``vecs`` (N, 2, 2) must already be branch-tracked;
    ``vecs[j, :, k]`` belongs to ``eps[j, k]``.
    """
    eps = clamp_eigenvalues(eps, neg_tol)
    total = 0.0 + 0.0j
    for k in range(2):
        v = vecs[:, :, k]
        steps = np.sum(np.conj(v[:-1]) * v[1:], axis=1)
        transport = np.sum(np.angle(steps))
        closing = np.vdot(v[0], v[-1])
        total += math.sqrt(eps[0, k] * eps[-1, k]) * closing * np.exp(-1j * transport)
    return total


def _phi(eps, vecs, neg_tol):
    phi = float(np.angle(phase_from_eigensystem(eps, vecs, neg_tol)))
    return math.pi if phi == -math.pi else phi


def geometric_phase(traj: Trajectory, tau: Optional[float] = None) -> GPResult:
    """Geometric phase accumulated by ``traj`` over [0, tau].

    ``tau`` defaults to the unitary precession period of ``traj.params``; the
    open-system path need not close there. ``converged`` reports whether
    dropping every other sample changes the phase by less than 1e-6.
    """
    tau = traj.params.period if tau is None else tau
    times = traj.times
    end = int(np.argmin(np.abs(times - tau)))
    if abs(times[end] - tau) > 1e-9 * max(tau, 1.0):
        raise ValueError(f"trajectory has no sample at tau = {tau!r}")
    if end < 2:
        raise ValueError("need at least two steps along the path")
    eps, vecs, _ = eigh_2x2(traj.rho[: end + 1])
    min_eig = float(np.min(eps))
    if min_eig < -traj.positivity_tol:
        raise InvalidStateError(f"negative eigenvalue {min_eig:.3e} along the path")
    gaps = eps[:, 0] - eps[:, 1]
    for j in (0, end):
        if gaps[j] < DEGENERATE_TOL:
            raise UndefinedPhaseError(f"degenerate state at t = {float(times[j])!r}")
    eps, vecs, _ = track_branches(eps, vecs)
    min_gap = float(np.min(np.abs(gaps)))

    phi = _phi(eps, vecs, traj.positivity_tol)
    converged = False
    if end % 2 == 0:
        coarse = _phi(eps[::2], vecs[::2], traj.positivity_tol)
        converged = abs(coarse - phi) < CONVERGENCE_TOL

    phi_u = unitary_berry_phase(traj.params)
    ratio = abs(phi) / phi_u if phi_u != 0 else float("nan")
    return GPResult(phi=phi, phi_unitary=phi_u, ratio=ratio, min_gap=min_gap,
                    converged=bool(converged), degraded=min_gap <= MIN_GAP_WARN,
                    min_eigenvalue=min_eig)


def gp_ratio(p: QubitParams, n: NoiseModel, cfg: Optional[EvolveConfig] = None,
             rho0=None, table=None) -> GPResult:
    """Evolve one cycle and compare the geometric phase with the Berry phase."""
    cfg = EvolveConfig.cycles(p) if cfg is None else cfg
    if cfg.t_end < p.period * (1 - 1e-12):
        raise ValueError("evolution must cover at least one period")
    traj = evolve(p, n, rho0, cfg, table=table)
    return geometric_phase(traj)
