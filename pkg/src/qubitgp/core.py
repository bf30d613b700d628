"""Pauli algebra, density matrices and Bloch vectors for a single qubit.

Units: every frequency is measured in units of the detuning, so ``delta`` is
fixed to 1 by default.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
PAULI = (SX, SY, SZ)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
NEG_EIG_TOL = 1e-8
BLOCH_TOL = 1e-8
DEGENERATE_TOL = 1e-12


class InvalidStateError(ValueError):
    """Raised when a matrix or vector is not a physical qubit state."""


class IntegrationError(RuntimeError):
    """Raised when a state leaves the physical region during integration."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t!r})")
        self.t = t


@dataclass(frozen=True)
class QubitParams:
    """Static rotated-frame Hamiltonian H = (omega sx + delta sz) / 2."""

    omega: float
    delta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be finite and > 0, got {self.delta}")
        if not (math.isfinite(self.omega) and self.omega >= 0):
            raise ValueError(f"omega must be finite and >= 0, got {self.omega}")

    @property
    def splitting(self) -> float:
        return math.hypot(self.omega, self.delta)

    @property
    def cos_theta(self) -> float:
        """Cosine of the cone half-angle between the field and the z axis."""
        return self.delta / self.splitting

    @property
    def period(self) -> float:
        """Precession period 2 pi / sqrt(omega^2 + delta^2)."""
        return 2.0 * math.pi / self.splitting

    def hamiltonian(self) -> np.ndarray:
        return 0.5 * (self.omega * SX + self.delta * SZ)

    def field(self) -> np.ndarray:
        """Precession vector B with dR/dt = B x R in the unitary limit."""
        return np.array([self.omega, 0.0, self.delta])


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, r) -> "BlochVector":
        x, y, z = (float(v) for v in r)
        return cls(x, y, z)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace 2x2 matrix. The stored array is read-only."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise InvalidStateError(f"expected a 2x2 matrix, got shape {m.shape}")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"matrix is not Hermitian (deviation {herm:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace is {tr!r}, expected 1")
        # exact Hermitian symmetrization keeps downstream eigensolvers honest
        m = 0.5 * (m + m.conj().T)
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -NEG_EIG_TOL:
            raise InvalidStateError(f"negative eigenvalue {lo:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash(self.matrix.tobytes())

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    @classmethod
    def ground(cls) -> "DensityMatrix":
        """|0><0|, the north pole of the Bloch sphere."""
        return cls(np.array([[1, 0], [0, 0]], dtype=complex))

    def __repr__(self):
        return f"DensityMatrix({self.matrix.tolist()!r})"


@dataclass(frozen=True)
class EigenPair:
    """Eigen-decomposition of a 2x2 Hermitian matrix, eigenvalues descending."""

    eps1: float
    eps2: float
    v1: np.ndarray
    v2: np.ndarray
    degenerate: bool = False


def density_from_bloch(r: BlochVector) -> DensityMatrix:
    """Return rho = (I + r . sigma) / 2."""
    if r.norm > 1.0 + BLOCH_TOL:
        raise InvalidStateError(f"|r| = {r.norm!r} exceeds 1")
    return DensityMatrix(bloch_to_matrix(r.as_array()))


def bloch_from_density(rho: DensityMatrix) -> BlochVector:
    return BlochVector.from_array(matrix_to_bloch(rho.matrix))


def bloch_to_matrix(r: np.ndarray) -> np.ndarray:
    """Vectorized rho = (I + r . sigma)/2 over a trailing axis of length 3."""
    r = np.asarray(r, dtype=float)
    out = np.empty(r.shape[:-1] + (2, 2), dtype=complex)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    out[..., 0, 0] = 0.5 * (1.0 + z)
    out[..., 1, 1] = 0.5 * (1.0 - z)
    out[..., 0, 1] = 0.5 * (x - 1j * y)
    out[..., 1, 0] = 0.5 * (x + 1j * y)
    return out


def matrix_to_bloch(m: np.ndarray) -> np.ndarray:
    """Vectorized R_i = Tr(rho sigma_i) over leading axes."""
    m = np.asarray(m)
    x = 2.0 * m[..., 0, 1].real
    y = -2.0 * m[..., 0, 1].imag
    z = (m[..., 0, 0] - m[..., 1, 1]).real
    return np.stack([x, y, z], axis=-1)


def eigh_2x2(m: np.ndarray):
    """Closed-form eigensystem of stacked 2x2 Hermitian matrices.

    Parameters
    ----------
    m : array_like, shape (..., 2, 2)

    Returns
    -------
    eps : ndarray, shape (..., 2)
        Eigenvalues in descending order.
    vecs : ndarray, shape (..., 2, 2)
        ``vecs[..., :, k]`` is the unit eigenvector for ``eps[..., k]``. The
        component of largest magnitude is made real and positive.
    degenerate : ndarray of bool, shape (...)
    """
    m = np.asarray(m, dtype=complex)
    a = 0.5 * (m[..., 0, 0].real + m[..., 1, 1].real)
    bz = 0.5 * (m[..., 0, 0].real - m[..., 1, 1].real)
    off = 0.5 * (m[..., 0, 1] + np.conj(m[..., 1, 0]))  # bx - i by
    bx, by = off.real, -off.imag
    b = np.sqrt(bx * bx + by * by + bz * bz)
    eps = np.stack([a + b, a - b], axis=-1)
    degenerate = 2.0 * b < DEGENERATE_TOL

    vecs = np.empty(m.shape, dtype=complex)
    for k, s in enumerate((1.0, -1.0)):
        # two null vectors of (m - eps_k); take the better-conditioned one
        use_second = s * bz >= 0
        u0 = np.where(use_second, s * b + bz, bx - 1j * by)
        u1 = np.where(use_second, bx + 1j * by, s * b - bz)
        nrm = np.sqrt(np.abs(u0) ** 2 + np.abs(u1) ** 2)
        safe = nrm > 0
        nrm = np.where(safe, nrm, 1.0)
        u0, u1 = u0 / nrm, u1 / nrm
        # degenerate or zero matrix: standard basis
        u0 = np.where(degenerate, 1.0 if k == 0 else 0.0, u0)
        u1 = np.where(degenerate, 0.0 if k == 0 else 1.0, u1)
        big = np.where(np.abs(u0) >= np.abs(u1), u0, u1)
        ph = np.where(np.abs(big) > 0, np.conj(big) / np.where(np.abs(big) > 0, np.abs(big), 1.0), 1.0)
        vecs[..., 0, k] = u0 * ph
        vecs[..., 1, k] = u1 * ph
    return eps, vecs, degenerate


def eig_hermitian_2x2(rho) -> EigenPair:
    """Eigen-decomposition of a single Hermitian 2x2 matrix or DensityMatrix."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    eps, vecs, deg = eigh_2x2(m)
    return EigenPair(
        eps1=float(eps[0]),
        eps2=float(eps[1]),
        v1=vecs[:, 0].copy(),
        v2=vecs[:, 1].copy(),
        degenerate=bool(deg),
    )


def clamp_eigenvalues(eps: np.ndarray, tol: float = NEG_EIG_TOL) -> np.ndarray:
    """Clamp eigenvalues in [-tol, 0) to zero; anything lower is an error."""
    eps = np.asarray(eps, dtype=float)
    lo = np.min(eps) if eps.size else 0.0
    if lo < -tol:
        raise InvalidStateError(f"eigenvalue {lo:.3e} below -{tol:g}")
    return np.maximum(eps, 0.0)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
