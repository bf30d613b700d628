"""Parameter sweeps over noise-model fields.

Every cell is an independent evolve (and, for ``gp_ratio``, a phase
extraction); results are assembled by cell index so the output does not
depend on the number of workers or the order in which cells finish.
"""
from __future__ import annotations

from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
import math
import platform
import threading
from typing import Optional, Sequence

import numpy as np
import scipy

from .core import QubitParams
from .dissipators import build_coeff_table, default_table_points
from .evolver import EvolveConfig, evolve
from .io import write_csv, write_json
from .kernels import GaussianNoise, NoiseModel
from .phase import geometric_phase

QUANTITIES = ("gp_ratio", "final_purity", "final_bloch")
# Redfield-type dynamics loses positivity for transverse low-frequency noise;
# sweeps tolerate it and report the worst eigenvalue per cell instead.
SWEEP_POSITIVITY_TOL = 0.1
FIG8_ALPHAS = (0.03, 10.0)


def sweep_config(p: QubitParams, n_cycles: float = 1.0, steps_per_cycle: int = 10_000) -> EvolveConfig:
    """Evolve settings used by the figure sweeps (one cycle, relaxed positivity)."""
    return EvolveConfig.cycles(p, n_cycles, steps_per_cycle, positivity_tol=SWEEP_POSITIVITY_TOL)


def default_gamma_grid(n: int = 21, top: float = 0.05) -> np.ndarray:
    return np.linspace(0.0, top, n)


def default_alpha_grid(n: int = 21, lo: float = 0.01, hi: float = 30.0) -> np.ndarray:
    return np.geomspace(lo, hi, n)


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError(f"axis {self.name!r} has an empty grid")
        if not all(math.isfinite(v) and v >= 0 for v in vals):
            raise ValueError(f"axis {self.name!r} values must be finite and >= 0")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError(f"axis {self.name!r} values must increase strictly")


@dataclass(frozen=True)
class SweepSpec:
    params: QubitParams
    noise: NoiseModel
    evolve: EvolveConfig
    axis1: Axis
    axis2: Optional[Axis] = None
    quantity: str = "gp_ratio"

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ValueError(f"quantity must be one of {QUANTITIES}, got {self.quantity!r}")
        names = {f.name for f in fields(self.noise)}
        for ax in (self.axis1, self.axis2):
            if ax is not None and ax.name not in names:
                raise ValueError(
                    f"axis {ax.name!r} is not a parameter of {type(self.noise).__name__}"
                    f" (expected one of {sorted(names)})"
                )
        if self.axis2 is not None and self.axis2.name == self.axis1.name:
            raise ValueError("the two axes must name different parameters")
        if self.quantity == "gp_ratio" and self.evolve.t_end < self.params.period * (1 - 1e-12):
            raise ValueError("gp_ratio sweeps need t_end >= one period")

    @property
    def shape(self):
        return (len(self.axis1.values), 1 if self.axis2 is None else len(self.axis2.values))

    def cell_noise(self, i: int, j: int) -> NoiseModel:
        upd = {self.axis1.name: self.axis1.values[i]}
        if self.axis2 is not None:
            upd[self.axis2.name] = self.axis2.values[j]
        return replace(self.noise, **upd)


@dataclass
class SweepResult:
    spec: SweepSpec
    values: np.ndarray
    converged: np.ndarray
    min_eigenvalue: np.ndarray
    errors: dict = field(default_factory=dict)

    @property
    def axis1(self) -> Axis:
        return self.spec.axis1

    @property
    def axis2(self) -> Optional[Axis]:
        return self.spec.axis2

    def column(self) -> np.ndarray:
        """Values of a one-axis sweep as a 1-D array."""
        return self.values[:, 0]

    def provenance(self) -> dict:
        from . import __version__

        spec = self.spec
        return {
            "qubit": asdict(spec.params),
            "noise_kind": spec.noise.kind,
            "noise_template": asdict(spec.noise),
            "evolve": asdict(spec.evolve),
            "quantity": spec.quantity,
            "axis1": {"name": spec.axis1.name, "values": list(spec.axis1.values)},
            "axis2": None if spec.axis2 is None
            else {"name": spec.axis2.name, "values": list(spec.axis2.values)},
            "versions": {
                "qubitgp": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
        }

    def to_csv(self, path):
        rows = []
        n1, n2 = self.values.shape
        for i in range(n1):
            for j in range(n2):
                lead = [self.axis1.values[i]]
                if self.axis2 is not None:
                    lead.append(self.axis2.values[j])
                rows.append(lead + [self.values[i, j], bool(self.converged[i, j])])
        header = [self.axis1.name] + ([self.axis2.name] if self.axis2 is not None else [])
        return write_csv(path, header + ["value", "converged"], rows)

    def to_json(self, path):
        return write_json(path, {
            "provenance": self.provenance(),
            "values": self.values.tolist(),
            "converged": self.converged.tolist(),
            "min_eigenvalue": self.min_eigenvalue.tolist(),
            "errors": {f"{i},{j}": msg for (i, j), msg in sorted(self.errors.items())},
        })


class TableCache:
    """Bounded LRU of coefficient tables keyed by (params, noise, t_end, npts)."""

    def __init__(self, maxsize: int = 32):
        self.maxsize = maxsize
        self._lock = threading.Lock()
        self._tables = OrderedDict()

    def get(self, p: QubitParams, n: NoiseModel, t_end: float, npts: int):
        key = (p, n, t_end, npts)
        with self._lock:
            tab = self._tables.get(key)
            if tab is not None:
                self._tables.move_to_end(key)
                return tab
        tab = build_coeff_table(p, n, t_end, npts)
        with self._lock:
            tab = self._tables.setdefault(key, tab)
            while len(self._tables) > self.maxsize:
                self._tables.popitem(last=False)
        return tab

    def __len__(self):
        return len(self._tables)

    def clear(self):
        with self._lock:
            self._tables.clear()


TABLES = TableCache()


def _run_cell(spec: SweepSpec, i: int, j: int):
    """Return (value, converged, min_eigenvalue, error message or None)."""
    try:
        n = spec.cell_noise(i, j)
        cfg = spec.evolve
        table = None
        if cfg.use_table:
            npts = cfg.table_npts or default_table_points(spec.params, cfg.t_end)
            table = TABLES.get(spec.params, n, cfg.t_end, npts)
        traj = evolve(spec.params, n, None, cfg, table=table)
        if spec.quantity == "gp_ratio":
            res = geometric_phase(traj)
            ok = res.converged and math.isfinite(res.ratio)
            return res.ratio, ok, res.min_eigenvalue, None
        r = traj.final_bloch
        value = 0.5 * (1.0 + float(r @ r)) if spec.quantity == "final_purity" else float(np.linalg.norm(r))
        return value, True, traj.min_eigenvalue, None
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        return float("nan"), False, float("nan"), f"{type(exc).__name__}: {exc}"


def _run_cell_star(args):
    return _run_cell(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate every cell of ``spec``; failed cells become NaN with a message."""
    n1, n2 = spec.shape
    cells = [(spec, i, j) for i in range(n1) for j in range(n2)]
    if workers <= 1 or len(cells) == 1:
        out = [_run_cell_star(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_run_cell_star, cells, chunksize=max(1, len(cells) // (4 * workers))))
    values = np.full((n1, n2), np.nan)
    conv = np.zeros((n1, n2), dtype=bool)
    mins = np.full((n1, n2), np.nan)
    errors = {}
    for (_, i, j), (v, ok, me, err) in zip(cells, out):
        values[i, j], conv[i, j], mins[i, j] = v, ok, me
        if err is not None:
            errors[(i, j)] = err
    return SweepResult(spec, values, conv, mins, errors)


def run_slices(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """One-axis sweep; ``spec.axis2`` must be unset."""
    if spec.axis2 is not None:
        raise ValueError("run_slices takes a spec with a single axis")
    return run_sweep(spec, workers)


def fig8_slices(p: QubitParams, gammas: Sequence[float], cfg: Optional[EvolveConfig] = None,
                alphas: Sequence[float] = FIG8_ALPHAS, workers: int = 1) -> dict:
    """Longitudinal-only and transverse-only gamma slices for each alpha.

    Keys are ``"longitudinal_alpha<a>"`` and ``"transverse_alpha<a>"``.
    """
    cfg = sweep_config(p) if cfg is None else cfg
    out = {}
    for a in alphas:
        for label, axis in (("longitudinal", "gamma0"), ("transverse", "gamma1")):
            spec = SweepSpec(p, GaussianNoise(0.0, 0.0, a, a), cfg, Axis(axis, tuple(gammas)))
            out[f"{label}_alpha{a:g}"] = run_slices(spec, workers)
    return out
