"""Open-system dynamics and geometric phase of a driven qubit under
longitudinal and transverse noise."""

__version__ = "0.1.0"

from .core import (
    BlochVector,
    DensityMatrix,
    EigenPair,
    IntegrationError,
    InvalidStateError,
    QubitParams,
    bloch_from_density,
    density_from_bloch,
    eig_hermitian_2x2,
)
from .kernels import DeltaNoise, GaussianNoise, OneOverFNoise
from .dissipators import (
    CoeffTable,
    DiffusionCoeffs,
    HeisenbergCoeffs,
    QuadratureError,
    build_coeff_table,
    diffusion_coefficients,
    heisenberg_functions,
)
from .evolver import EvolveConfig, Trajectory, evolve, master_rhs
from .phase import GPResult, UndefinedPhaseError, geometric_phase, gp_ratio, unitary_berry_phase
from .sweep import Axis, SweepResult, SweepSpec, run_slices, run_sweep
