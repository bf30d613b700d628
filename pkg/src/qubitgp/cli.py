"""Command-line front end.

    qubitgp {trajectory,phase,sweep,kernels} --config run.yaml [--out DIR]
            [--threads N] [--validate-only]

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
Every run writes ``<name>_manifest.json`` next to its outputs.
"""
from __future__ import annotations

import argparse
import hashlib
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load
from .core import BlochVector, IntegrationError, InvalidStateError, density_from_bloch
from .dissipators import COEFF_NAMES, QuadratureError, diffusion_coefficients
from .evolver import evolve
from .io import write_csv, write_json
from .kernels import DeltaNoise
from .phase import UndefinedPhaseError, geometric_phase
from .sweep import Axis, SweepSpec, fig8_slices, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
COMMANDS = ("trajectory", "phase", "sweep", "kernels")

NUMERICAL_ERRORS = (IntegrationError, QuadratureError, InvalidStateError, UndefinedPhaseError,
                    ArithmeticError)


def _versions() -> dict:
    import numba
    import scipy
    import yaml

    return {
        "qubitgp": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "pyyaml": yaml.__version__,
        "python": platform.python_version(),
    }


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(cfg: RunConfig, command: str, out: Path, outputs, grid: dict) -> Path:
    return write_json(out / f"{cfg.name}_manifest.json", {
        "command": command,
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "grid": grid,
        "outputs": {p.name: _sha256(p) for p in outputs},
        "versions": _versions(),
    })


def _rho0(cfg: RunConfig):
    return density_from_bloch(BlochVector(*cfg.initial_state))


def _require(cfg: RunConfig, block: str, command: str):
    if getattr(cfg, block) is None:
        raise ConfigError(f"the {command} command needs a '{block}' block", field=block)


def _time_grid(ecfg) -> dict:
    return {"t_end": ecfg.t_end, "n_steps": ecfg.n_steps, "dt": ecfg.t_end / ecfg.n_steps,
            "sample_every": ecfg.sample_every, "method": ecfg.method, "form": ecfg.form}


def cmd_trajectory(cfg: RunConfig, out: Path, threads: int):
    ecfg = cfg.evolve_config()
    traj = evolve(cfg.qubit, cfg.noise, _rho0(cfg), ecfg)
    path = traj.to_csv(out / f"{cfg.name}_trajectory.csv")
    tau = cfg.qubit.period
    k = int(np.argmin(np.abs(traj.times - tau)))
    if abs(traj.times[k] - tau) <= 1e-9 * tau:
        label = "1-|R(tau)|"
    else:
        k, label = len(traj.times) - 1, "1-|R(t_end)|"
    loss = 1.0 - float(np.linalg.norm(traj.bloch[k]))
    print(f"{cfg.name}: {label} = {loss:.6g} at t = {traj.times[k]:.6g} (tau = {tau:.6g})")
    return [path], _time_grid(ecfg)


def cmd_phase(cfg: RunConfig, out: Path, threads: int):
    ecfg = cfg.evolve_config()
    if ecfg.t_end < cfg.qubit.period * (1 - 1e-12):
        raise ConfigError("phase needs evolve.cycles >= 1", field="evolve.cycles")
    traj = evolve(cfg.qubit, cfg.noise, _rho0(cfg), ecfg)
    try:
        res = geometric_phase(traj)
    except UndefinedPhaseError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), field="evolve") from exc
    path = res.to_json(out / f"{cfg.name}_phase.json")
    print(f"{cfg.name}: phi = {res.phi:.9g}, phi_unitary = {res.phi_unitary:.9g}, "
          f"ratio = {res.ratio:.9g}, converged = {res.converged}")
    return [path], _time_grid(ecfg)


def cmd_sweep(cfg: RunConfig, out: Path, threads: int):
    _require(cfg, "sweep", "sweep")
    sw = cfg.sweep
    ecfg = cfg.evolve_config()
    if sw.quantity == "gp_ratio" and ecfg.t_end < cfg.qubit.period * (1 - 1e-12):
        raise ConfigError("gp_ratio sweeps need evolve.cycles >= 1", field="evolve.cycles")
    if cfg.initial_state != (0.0, 0.0, 1.0):
        raise ConfigError("sweeps start from the default state", field="initial_state")
    outputs = []
    if sw.mode == "fig8":
        results = fig8_slices(cfg.qubit, sw.gammas, ecfg, sw.alphas, workers=threads)
        grid = {"gammas": list(sw.gammas), "alphas": list(sw.alphas), "slices": list(results)}
    else:
        a1 = Axis(sw.axis1.name, sw.axis1.values)
        a2 = None if sw.axis2 is None else Axis(sw.axis2.name, sw.axis2.values)
        spec = SweepSpec(cfg.qubit, cfg.noise, ecfg, a1, a2, sw.quantity)
        results = {"": run_sweep(spec, workers=threads)}
        grid = {"axis1": {"name": a1.name, "values": list(a1.values)},
                "axis2": None if a2 is None else {"name": a2.name, "values": list(a2.values)}}
    for key, res in results.items():
        stem = f"{cfg.name}_{key}" if key else cfg.name
        outputs.append(res.to_csv(out / f"{stem}.csv"))
        outputs.append(res.to_json(out / f"{stem}.json"))
        n_bad = int(np.sum(~res.converged))
        vals = res.values[np.isfinite(res.values)]
        rng = f"[{vals.min():.6g}, {vals.max():.6g}]" if vals.size else "[]"
        print(f"{stem}: {res.values.size} cells, value range {rng}, "
              f"{n_bad} unconverged, {len(res.errors)} failed")
    return outputs, grid


def _kernel_column(kernel_fn, noise, t: np.ndarray) -> np.ndarray:
    if isinstance(noise, DeltaNoise):
        return np.full(t.shape, np.nan)
    col = np.empty(t.shape)
    pos = t > 0
    col[pos] = kernel_fn(t[pos])
    if np.any(~pos):
        col[~pos] = np.inf if getattr(noise, "singular_at_zero", False) else kernel_fn(np.array([0.0]))[0]
    return col


def cmd_kernels(cfg: RunConfig, out: Path, threads: int):
    _require(cfg, "kernels", "kernels")
    kb = cfg.kernels
    t = np.array([kb.t_end]) if kb.npts == 1 else np.linspace(0.0, kb.t_end, kb.npts)
    n = cfg.noise
    phi0 = _kernel_column(getattr(n, "kernel0", None), n, t)
    phi1 = _kernel_column(getattr(n, "kernel1", None), n, t)
    coeffs = np.array([diffusion_coefficients(cfg.qubit, n, float(x)).as_array() for x in t])
    rows = np.column_stack([t, phi0, phi1, coeffs])
    path = write_csv(out / f"{cfg.name}_kernels.csv", ("t", "phi0", "phi1") + COEFF_NAMES, rows)
    last = dict(zip(COEFF_NAMES, coeffs[-1]))
    print(f"{cfg.name}: {len(t)} rows; at t = {t[-1]:.6g}: "
          + ", ".join(f"{k} = {v:.6g}" for k, v in last.items()))
    return [path], {"t": t.tolist()}


HANDLERS = {"trajectory": cmd_trajectory, "phase": cmd_phase, "sweep": cmd_sweep,
            "kernels": cmd_kernels}
REQUIRED_BLOCKS = {"sweep": "sweep", "kernels": "kernels"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qubitgp", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = ap.add_subparsers(dest="command", required=True, metavar="{" + ",".join(COMMANDS) + "}")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path, help="YAML run configuration")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory (created if absent)")
        sp.add_argument("--threads", type=int, default=1, help="maximum worker processes for sweeps")
        sp.add_argument("--validate-only", action="store_true",
                        help="parse and validate the config, then exit")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    threads = min(args.threads, os.cpu_count() or 1)
    try:
        cfg = load(args.config)
        block = REQUIRED_BLOCKS.get(args.command)
        if block is not None:
            _require(cfg, block, args.command)
        if args.validate_only:
            print(f"{args.config}: valid ({args.command}, sha256 {cfg.digest()[:12]})")
            return EXIT_OK
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        outputs, grid = HANDLERS[args.command](cfg, out, threads)
        _write_manifest(cfg, args.command, out, outputs, grid)
    except ConfigError as exc:
        print(f"{args.config}: invalid config: {exc.describe()}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        where = f" at t = {exc.t!r}" if getattr(exc, "t", None) is not None else ""
        print(f"numerical failure{where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"{args.config}: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
