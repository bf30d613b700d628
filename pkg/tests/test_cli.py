import json
from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given, strategies as st

from qubitgp.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from qubitgp.config import ConfigError, RunConfig, dumps, loads
from qubitgp.io import read_csv

PROTOCOLS = Path(__file__).resolve().parents[1] / "protocols"

BASE = {
    "name": "t",
    "qubit": {"omega": 0.5},
    "noise": {"kind": "gaussian", "gamma0": 0.03, "gamma1": 0.03, "alpha0": 0.03, "alpha1": 0.03},
    "evolve": {"cycles": 1.0, "steps_per_cycle": 2000, "sample_every": 20},
}


def write(tmp_path, cfg, name="c.yaml"):
    path = tmp_path / name
    path.write_text(cfg if isinstance(cfg, str) else yaml.safe_dump(cfg))
    return path


def run(cmd, cfg_path, out, *extra):
    return main([cmd, "--config", str(cfg_path), "--out", str(out), *extra])


@pytest.mark.parametrize("path", sorted(PROTOCOLS.glob("*.yaml")), ids=lambda p: p.stem)
def test_protocols_validate(path):
    cfg = loads(path.read_text())
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    cmd = "sweep" if cfg.sweep else "kernels" if cfg.kernels else "trajectory"
    assert main([cmd, "--config", str(path), "--validate-only"]) == EXIT_OK


def test_trajectory_summary_and_outputs(tmp_path, capsys):
    out = tmp_path / "new" / "dir"
    assert run("trajectory", write(tmp_path, BASE), out) == EXIT_OK
    line = capsys.readouterr().out
    assert "1-|R(tau)|" in line
    loss = float(line.split("=")[1].split()[0])
    assert 0.08 <= loss <= 0.24
    header, rows = read_csv(out / "t_trajectory.csv")
    assert header == ("t", "rx", "ry", "rz", "purity", "eps1", "eps2")
    man = json.loads((out / "t_manifest.json").read_text())
    assert man["config_sha256"] == loads(yaml.safe_dump(BASE)).digest()
    assert "t_trajectory.csv" in man["outputs"]
    assert man["grid"]["n_steps"] == 2000


def test_noiseless_trajectory(tmp_path, capsys):
    cfg = dict(BASE, noise={"kind": "delta", "gamma0": 0.0, "gamma1": 0.0})
    assert run("trajectory", write(tmp_path, cfg), tmp_path) == EXIT_OK
    loss = float(capsys.readouterr().out.split("=")[1].split()[0])
    assert abs(loss) < 1e-6


def test_phase_command(tmp_path):
    cfg = dict(BASE, noise={"kind": "gaussian", "gamma0": 0.0, "gamma1": 0.0, "alpha0": 1, "alpha1": 1},
               evolve={"steps_per_cycle": 10000})
    assert run("phase", write(tmp_path, cfg), tmp_path) == EXIT_OK
    res = json.loads((tmp_path / "t_phase.json").read_text())
    assert res["phi_unitary"] == pytest.approx(0.331661, abs=1e-5)
    assert res["ratio"] == pytest.approx(1.0, abs=1e-5)
    assert res["converged"] is True


def test_unknown_key_reports_line(tmp_path, capsys):
    text = "name: t\nqubit: {omega: 0.5}\nnoise:\n  kind: gaussian\n  gamma0: 0.1\n  gamma1: 0.1\n" \
           "  alpha0: 1\n  alpha1: 1\n  beta: 2\n"
    assert run("phase", write(tmp_path, text), tmp_path) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line 9" in err and "noise.beta" in err


@pytest.mark.parametrize("noise", [
    {"kind": "gaussian", "gamma0": 0.1},
    {"kind": "gaussian", "gamma0": -0.1, "gamma1": 0.1, "alpha0": 1, "alpha1": 1},
    {"kind": "gaussian", "gamma0": 0.1, "gamma1": 0.1, "alpha0": 0, "alpha1": 1},
    {"kind": "lorentzian"},
    {"kind": "one_over_f", "gamma": 1.0, "lam": 0.1, "regime": "high_t"},
    "gaussian",
])
def test_malformed_noise_block(tmp_path, noise):
    assert run("phase", write(tmp_path, dict(BASE, noise=noise)), tmp_path) == EXIT_CONFIG


def test_yaml_syntax_error_and_missing_file(tmp_path, capsys):
    assert run("phase", write(tmp_path, "name: t\nqubit: {omega: 0.5\n"), tmp_path) == EXIT_CONFIG
    assert "line" in capsys.readouterr().err
    assert run("phase", tmp_path / "absent.yaml", tmp_path) == EXIT_CONFIG


def test_missing_command_block(tmp_path):
    assert run("sweep", write(tmp_path, BASE), tmp_path) == EXIT_CONFIG
    assert run("kernels", write(tmp_path, BASE), tmp_path, "--validate-only") == EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = dict(BASE, noise={"kind": "gaussian", "gamma0": 0.0, "gamma1": 0.5, "alpha0": 0.01, "alpha1": 0.01})
    assert run("trajectory", write(tmp_path, cfg), tmp_path) == EXIT_NUMERICAL
    assert "t =" in capsys.readouterr().err
    mixed = dict(BASE, initial_state=[0.0, 0.0, 0.0])
    assert run("phase", write(tmp_path, mixed), tmp_path) == EXIT_NUMERICAL


def test_validate_only_writes_nothing(tmp_path):
    out = tmp_path / "o"
    assert run("trajectory", write(tmp_path, BASE), out, "--validate-only") == EXIT_OK
    assert not out.exists()


def test_sweep_rerun_is_byte_identical(tmp_path):
    cfg = dict(BASE, noise={"kind": "gaussian", "gamma0": 0.0, "gamma1": 0.0, "alpha0": 10, "alpha1": 10},
               sweep={"mode": "grid", "axis1": {"name": "gamma0", "values": [0.0, 0.05]},
                      "axis2": {"name": "gamma1", "linspace": [0.0, 0.05, 2]}})
    cfg["evolve"] = {"steps_per_cycle": 10000, "positivity_tol": 0.1}
    path = write(tmp_path, cfg)
    assert run("sweep", path, tmp_path / "a") == EXIT_OK
    assert run("sweep", path, tmp_path / "b", "--threads", "2") == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["t.csv", "t.json", "t_manifest.json"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    header, rows = read_csv(tmp_path / "a" / "t.csv")
    assert header == ("gamma0", "gamma1", "value", "converged")
    assert len(rows) == 4


def test_fig8_bundle(tmp_path):
    cfg = dict(BASE, noise={"kind": "gaussian", "gamma0": 0.0, "gamma1": 0.0, "alpha0": 1, "alpha1": 1},
               sweep={"mode": "fig8", "gammas": [0.0, 0.01]})
    cfg["evolve"] = {"steps_per_cycle": 1000, "positivity_tol": 0.1}
    assert run("sweep", write(tmp_path, cfg), tmp_path) == EXIT_OK
    csvs = sorted(p.name for p in tmp_path.glob("t_*.csv"))
    assert csvs == ["t_longitudinal_alpha0.03.csv", "t_longitudinal_alpha10.csv",
                    "t_transverse_alpha0.03.csv", "t_transverse_alpha10.csv"]


def test_kernels_command(tmp_path):
    delta = dict(BASE, noise={"kind": "delta", "gamma0": 0.03, "gamma1": 0.03}, kernels={"t_end": 2.0, "npts": 5})
    assert run("kernels", write(tmp_path, delta), tmp_path) == EXIT_OK
    header, rows = read_csv(tmp_path / "t_kernels.csv")
    assert header == ("t", "phi0", "phi1", "dxx", "fxy", "fxz", "fzx", "fzy", "dzz")
    assert all(r[3:] == [0.03, 0.0, 0.0, 0.0, 0.0, 0.03] for r in rows)

    single = dict(BASE, name="one", kernels={"t_end": 2.0, "npts": 1})
    assert run("kernels", write(tmp_path, single), tmp_path) == EXIT_OK
    _, rows = read_csv(tmp_path / "one_kernels.csv")
    assert len(rows) == 1 and rows[0][0] == 2.0

    sat = {}
    for a in (0.03, 30.0):
        cfg = dict(BASE, name=f"a{a:g}", kernels={"cycles": 1.0, "npts": 3},
                   noise={"kind": "gaussian", "gamma0": 0.03, "gamma1": 0.03, "alpha0": a, "alpha1": a})
        assert run("kernels", write(tmp_path, cfg), tmp_path) == EXIT_OK
        sat[a] = read_csv(tmp_path / f"a{a:g}_kernels.csv")[1][-1][-1]
    assert sat[0.03] > 10 * sat[30.0]


def test_singular_kernel_column(tmp_path):
    cfg = dict(BASE, noise={"kind": "one_over_f", "gamma": 1.0, "lam": 0.1}, kernels={"t_end": 1.0, "npts": 3})
    assert run("kernels", write(tmp_path, cfg), tmp_path) == EXIT_OK
    _, rows = read_csv(tmp_path / "t_kernels.csv")
    assert rows[0][1] == np.inf and rows[0][3] == 0.0


finite = st.floats(0.0, 1.0, allow_nan=False)


@given(
    st.sampled_from(["delta", "gaussian", "one_over_f"]),
    finite, finite, st.floats(0.01, 30.0), st.integers(2, 20000), st.booleans(),
)
def test_config_round_trip(kind, g0, g1, alpha, steps, use_table):
    noise = {
        "delta": {"kind": "delta", "gamma0": g0, "gamma1": g1, "kBT": 1.0},
        "gaussian": {"kind": "gaussian", "gamma0": g0, "gamma1": g1, "alpha0": alpha, "alpha1": alpha},
        "one_over_f": {"kind": "one_over_f", "gamma": g0, "lam": alpha, "regime": "high_t", "kBT": g1},
    }[kind]
    d = {"name": "rt", "qubit": {"omega": g1}, "noise": noise,
         "evolve": {"steps_per_cycle": steps, "use_table": use_table}}
    cfg = RunConfig.from_dict(d)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    assert loads(dumps(cfg)) == cfg
    assert loads(dumps(cfg)).digest() == cfg.digest()


def test_grid_expansion_round_trip():
    d = dict(BASE, sweep={"mode": "grid", "axis1": {"name": "alpha0", "geomspace": [0.01, 30.0, 5]},
                          "axis2": {"name": "alpha1", "values": [0.1, 1.0]}})
    cfg = RunConfig.from_dict(d)
    assert len(cfg.sweep.axis1.values) == 5
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("sweep, field", [
    ({"mode": "grid", "axis1": {"name": "gamma0", "values": []}, "axis2": {"name": "gamma1", "values": [0.0]}},
     "sweep.axis1.values"),
    ({"mode": "grid", "axis1": {"name": "lam", "values": [0.1]}, "axis2": {"name": "gamma1", "values": [0.0]}},
     "sweep.axis1.name"),
    ({"mode": "slices", "axis1": {"name": "gamma0", "values": [0.2, 0.1]}}, "sweep.axis1.values"),
    ({"mode": "grid", "axis1": {"name": "gamma0", "values": [0.1]}}, "sweep.axis2"),
])
def test_bad_sweep_blocks(sweep, field):
    with pytest.raises(ConfigError) as err:
        RunConfig.from_dict(dict(BASE, sweep=sweep))
    assert err.value.field == field
