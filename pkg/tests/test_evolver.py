import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qubitgp.core import BlochVector, IntegrationError, QubitParams, density_from_bloch
from qubitgp.dissipators import DiffusionCoeffs, build_coeff_table
from qubitgp.evolver import (
    EvolveConfig,
    Trajectory,
    bloch_generator,
    check_states,
    evolve,
    master_rhs,
    step_norms,
)
from qubitgp.io import read_csv
from qubitgp.kernels import DeltaNoise, GaussianNoise, OneOverFNoise

NOISELESS = GaussianNoise(0.0, 0.0, 1.0, 1.0)


@st.composite
def states(draw):
    v = np.array([draw(st.floats(-1, 1)) for _ in range(3)])
    n = np.linalg.norm(v)
    return v / n * draw(st.floats(0.05, 1.0)) if n > 1e-3 else np.array([0.0, 0.0, 1.0])


@given(states(), st.lists(st.floats(-0.2, 0.2), min_size=6, max_size=6))
def test_bloch_generator_matches_matrix_rhs(r, c):
    p = QubitParams(0.5)
    coeffs = DiffusionCoeffs(*c)
    rho = density_from_bloch(BlochVector(*r)).matrix
    d = master_rhs(p, coeffs, rho)
    dr = np.array([2 * d[0, 1].real, -2 * d[0, 1].imag, (d[0, 0] - d[1, 1]).real])
    np.testing.assert_allclose(bloch_generator(p, coeffs) @ r, dr, atol=1e-14)
    assert abs(np.trace(d)) < 1e-15
    np.testing.assert_allclose(d, d.conj().T, atol=1e-15)


def test_unitary_cycle_closes_and_keeps_purity(params):
    traj = evolve(params, NOISELESS)
    assert np.max(np.abs(traj.purity - 1)) < 1e-8
    np.testing.assert_allclose(traj.final_bloch, [0, 0, 1], atol=1e-9)


def test_unitary_precession_matches_rotation(params):
    traj = evolve(params, NOISELESS, cfg=EvolveConfig.cycles(params, 0.37, 4000))
    n = np.array([params.omega, 0, params.delta]) / params.splitting
    r0 = np.array([0.0, 0.0, 1.0])
    ang = params.splitting * traj.times[-1]
    ref = (r0 * math.cos(ang) + np.cross(n, r0) * math.sin(ang) + n * (n @ r0) * (1 - math.cos(ang)))
    np.testing.assert_allclose(traj.final_bloch, ref, atol=1e-10)


@pytest.mark.parametrize("n", [
    DeltaNoise(0.03, 0.03),
    GaussianNoise(0.03, 0.03, 0.3, 0.3),
    OneOverFNoise(1.0, 0.01),
], ids=lambda n: n.kind)
def test_matrix_and_bloch_forms_agree(params, n):
    cfg = EvolveConfig.cycles(params, 1.0, 2000)
    tab = build_coeff_table(params, n, cfg.t_end, 4097)
    a = evolve(params, n, cfg=cfg, table=tab)
    b = evolve(params, n, cfg=EvolveConfig.cycles(params, 1.0, 2000, form="matrix"), table=tab)
    np.testing.assert_allclose(a.rho, b.rho, atol=1e-9)


def test_matrix_form_conserves_trace_and_hermiticity(params):
    n = GaussianNoise(0.03, 0.03, 1.0, 1.0)
    traj = evolve(params, n, cfg=EvolveConfig.cycles(params, 3.0, 5000, form="matrix"))
    tr = np.trace(traj.rho, axis1=1, axis2=2)
    assert np.max(np.abs(tr - 1)) < 1e-9
    assert np.max(np.abs(traj.rho - np.conj(np.swapaxes(traj.rho, 1, 2)))) < 1e-12


def test_rk4_order(params):
    n = GaussianNoise(0.03, 0.03, 1.0, 1.0)
    tab = build_coeff_table(params, n, params.period, 8193)
    fin = {m: evolve(params, n, cfg=EvolveConfig.cycles(params, 1, m), table=tab).final_bloch
           for m in (50, 100, 1600)}
    order = math.log2(np.linalg.norm(fin[50] - fin[1600]) / np.linalg.norm(fin[100] - fin[1600]))
    assert 3.7 <= order <= 4.3


def test_rk4_order_with_direct_quadrature(params):
    n = GaussianNoise(0.05, 0.05, 2.0, 2.0)
    cfg = lambda m: EvolveConfig.cycles(params, 0.25, m, use_table=False)
    fin = {m: evolve(params, n, cfg=cfg(m)).final_bloch for m in (40, 80, 640)}
    order = math.log2(np.linalg.norm(fin[40] - fin[640]) / np.linalg.norm(fin[80] - fin[640]))
    assert 3.7 <= order <= 4.3


def test_rk45_agrees_with_rk4(params):
    n = GaussianNoise(0.03, 0.03, 0.3, 0.3)
    a = evolve(params, n, cfg=EvolveConfig.cycles(params, 1, 4000))
    b = evolve(params, n, cfg=EvolveConfig.cycles(params, 1, 4000, method="rk45"))
    np.testing.assert_allclose(a.final_bloch, b.final_bloch, atol=1e-7)


def test_delta_norm_never_increases(params):
    norms = step_norms(params, DeltaNoise(0.03, 0.03), cfg=EvolveConfig.cycles(params, 2.0))
    assert np.all(np.diff(norms ** 2) <= 0)


def test_sampling_keeps_endpoints(params):
    traj = evolve(params, NOISELESS, cfg=EvolveConfig.cycles(params, 1, 1000, sample_every=7))
    assert traj.times[0] == 0.0
    assert traj.times[-1] == pytest.approx(params.period, abs=1e-12)
    assert len(traj) == 1000 // 7 + 2


def test_custom_initial_state(params):
    rho0 = density_from_bloch(BlochVector(0.3, 0.0, 0.0))
    traj = evolve(params, NOISELESS, rho0, EvolveConfig.cycles(params, 0.5, 2000))
    assert np.linalg.norm(traj.final_bloch) == pytest.approx(0.3, abs=1e-10)


def test_positivity_violation_aborts(params):
    strong = GaussianNoise(0.0, 0.5, 0.01, 0.01)
    with pytest.raises(IntegrationError) as err:
        evolve(params, strong, cfg=EvolveConfig.cycles(params, 1, 2000))
    assert err.value.t is not None and err.value.t > 0


def test_check_states_reports_time():
    rho = np.array([[[1, 0], [0, 0]], [[1.2, 0], [0, -0.2]]], dtype=complex)
    with pytest.raises(IntegrationError) as err:
        check_states(rho, np.array([0.0, 0.5]))
    assert err.value.t == 0.5


@pytest.mark.parametrize("kw", [dict(t_end=0, dt=0.1), dict(t_end=1, dt=-1), dict(t_end=1, dt=0.1, sample_every=0),
                                dict(t_end=1, dt=0.1, method="euler"), dict(t_end=1, dt=0.1, form="vector")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        EvolveConfig(**kw)


def test_trajectory_csv_is_bit_exact(params, tmp_path):
    n = GaussianNoise(0.03, 0.03, 0.03, 0.03)
    cfg = EvolveConfig.cycles(params, 1, 1000, sample_every=50)
    a = evolve(params, n, cfg=cfg).to_csv(tmp_path / "a.csv")
    b = evolve(params, n, cfg=cfg).to_csv(tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    header, rows = read_csv(a)
    assert header == ("t", "rx", "ry", "rz", "purity", "eps1", "eps2")
    traj = evolve(params, n, cfg=cfg)
    np.testing.assert_array_equal(np.array(rows)[:, 1:4], traj.bloch)
    assert b"\r" not in a.read_bytes()


def test_trajectory_rejects_bad_times(params):
    rho = np.array([np.eye(2) / 2] * 2)
    with pytest.raises(ValueError):
        Trajectory(np.array([0.1, 0.2]), rho, params, NOISELESS)
