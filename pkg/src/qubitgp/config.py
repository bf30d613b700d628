"""YAML run configuration.

Grammar (all frequencies in units of the qubit splitting Delta, fixed at 1)::

    name: fig1_red                  # output file stem, [A-Za-z0-9_.-]+
    qubit:
      omega: 0.5
    noise:
      kind: gaussian                # delta | gaussian | one_over_f
      gamma0: 0.03                  # delta, gaussian
      gamma1: 0.03                  # delta, gaussian
      kBT: 1.0                      # delta; one_over_f (high_t only)
      alpha0: 0.03                  # gaussian
      alpha1: 0.03                  # gaussian
      gamma: 7.0                    # one_over_f
      lam: 0.001                    # one_over_f
      regime: zero_t                # one_over_f: zero_t | high_t
    evolve:                         # optional; every key optional
      cycles: 1.0                   # t_end in units of the period
      steps_per_cycle: 10000
      sample_every: 1
      method: rk4                   # rk4 | rk45
      form: bloch                   # bloch | matrix
      use_table: true
      rtol: 1.0e-10
      positivity_tol: 1.0e-8
    initial_state: [0.0, 0.0, 1.0]  # optional Bloch vector, |R| <= 1
    sweep:                          # sweep command only
      mode: grid                    # grid | slices | fig8
      quantity: gp_ratio            # gp_ratio | final_purity | final_bloch
      axis1: {name: gamma0, values: [0.0, 0.01]}
      axis2: {name: gamma1, linspace: [0.0, 0.05, 21]}   # or geomspace: [lo, hi, n]
      gammas: {linspace: [0.0, 0.05, 21]}                # fig8 mode
      alphas: [0.03, 10.0]                               # fig8 mode
    kernels:                        # kernels command only
      t_end: 5.0                    # or cycles: 1.0
      npts: 101

Unknown keys are rejected. A grid given as linspace/geomspace is expanded
on load, so ``RunConfig.from_dict(cfg.to_dict()) == cfg``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
import hashlib
import json
import math
import re
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .core import NEG_EIG_TOL, QubitParams
from .evolver import EvolveConfig
from .kernels import DeltaNoise, GaussianNoise, NoiseModel, OneOverFNoise

NOISE_KINDS = {"delta": DeltaNoise, "gaussian": GaussianNoise, "one_over_f": OneOverFNoise}
SWEEP_MODES = ("grid", "slices", "fig8")
_NAME_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is a dotted path, ``line`` 1-based or None."""

    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        self.field = field
        self.line = line
        self.message = message
        super().__init__(self.describe())

    def describe(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field:
            where.append(f"field '{self.field}'")
        return (", ".join(where) + ": " if where else "") + self.message


@dataclass(frozen=True)
class EvolveBlock:
    cycles: float = 1.0
    steps_per_cycle: int = 10_000
    sample_every: int = 1
    method: str = "rk4"
    form: str = "bloch"
    use_table: bool = True
    rtol: float = 1e-10
    positivity_tol: float = NEG_EIG_TOL

    def to_evolve_config(self, p: QubitParams) -> EvolveConfig:
        return EvolveConfig.cycles(
            p, self.cycles, self.steps_per_cycle, sample_every=self.sample_every,
            method=self.method, form=self.form, use_table=self.use_table,
            rtol=self.rtol, positivity_tol=self.positivity_tol,
        )


@dataclass(frozen=True)
class AxisBlock:
    name: str
    values: tuple


@dataclass(frozen=True)
class SweepBlock:
    mode: str = "grid"
    quantity: str = "gp_ratio"
    axis1: Optional[AxisBlock] = None
    axis2: Optional[AxisBlock] = None
    gammas: tuple = ()
    alphas: tuple = (0.03, 10.0)


@dataclass(frozen=True)
class KernelsBlock:
    t_end: float
    npts: int


@dataclass(frozen=True)
class RunConfig:
    name: str
    qubit: QubitParams
    noise: NoiseModel
    evolve: EvolveBlock = field(default_factory=EvolveBlock)
    initial_state: tuple = (0.0, 0.0, 1.0)
    sweep: Optional[SweepBlock] = None
    kernels: Optional[KernelsBlock] = None

    def evolve_config(self) -> EvolveConfig:
        return self.evolve.to_evolve_config(self.qubit)

    def to_dict(self) -> dict:
        noise = {"kind": self.noise.kind}
        noise.update({f.name: getattr(self.noise, f.name) for f in fields(self.noise)})
        out: dict[str, Any] = {
            "name": self.name,
            "qubit": {"omega": self.qubit.omega},
            "noise": noise,
            "evolve": asdict(self.evolve),
            "initial_state": list(self.initial_state),
        }
        if self.sweep is not None:
            sw: dict[str, Any] = {"mode": self.sweep.mode, "quantity": self.sweep.quantity}
            for key in ("axis1", "axis2"):
                ax = getattr(self.sweep, key)
                if ax is not None:
                    sw[key] = {"name": ax.name, "values": list(ax.values)}
            if self.sweep.mode == "fig8":
                sw["gammas"] = list(self.sweep.gammas)
                sw["alphas"] = list(self.sweep.alphas)
            out["sweep"] = sw
        if self.kernels is not None:
            out["kernels"] = {"t_end": self.kernels.t_end, "npts": self.kernels.npts}
        return out

    def digest(self) -> str:
        """sha256 of the canonical JSON form."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d, lines: Optional[dict] = None) -> "RunConfig":
        return _Parser(lines or {}).run_config(d)


def _line_index(text: str) -> dict:
    """Map dotted key paths to the 1-based line of the key in the YAML source."""
    out: dict = {}
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return out

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = f"{path}.{k.value}" if path else str(k.value)
                out.setdefault(p, k.start_mark.line + 1)
                walk(v, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                p = f"{path}[{i}]"
                out.setdefault(p, v.start_mark.line + 1)
                walk(v, p)

    if root is not None:
        walk(root, "")
    return out


def loads(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML syntax error: {exc.problem}", line=line) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML error: {exc}") from exc
    return RunConfig.from_dict(data, _line_index(text))


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from exc
    return loads(text)


def dumps(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


class _Parser:
    def __init__(self, lines: dict):
        self.lines = lines

    def fail(self, path: str, msg: str):
        line = self.lines.get(path)
        parent = path
        while line is None and "." in parent:
            parent = parent.rsplit(".", 1)[0]
            line = self.lines.get(parent)
        raise ConfigError(msg, field=path, line=line)

    def mapping(self, d, path: str, allowed, required=()) -> dict:
        if not isinstance(d, dict):
            self.fail(path, "expected a mapping")
        for k in d:
            if k not in allowed:
                self.fail(f"{path}.{k}" if path else str(k),
                          f"unknown key (allowed: {', '.join(sorted(allowed))})")
        for k in required:
            if k not in d:
                self.fail(f"{path}.{k}" if path else k, "missing required key")
        return d

    def number(self, d, key, path, default=None, lo=None, strict=False) -> float:
        p = f"{path}.{key}"
        if key not in d:
            if default is None:
                self.fail(p, "missing required key")
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(p, f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            self.fail(p, "must be finite")
        if lo is not None and (v <= lo if strict else v < lo):
            self.fail(p, f"must be {'>' if strict else '>='} {lo}, got {v!r}")
        return v

    def integer(self, d, key, path, default, lo) -> int:
        p = f"{path}.{key}"
        v = d.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(p, f"expected an integer, got {v!r}")
        if v < lo:
            self.fail(p, f"must be >= {lo}, got {v!r}")
        return v

    def choice(self, d, key, path, options, default):
        v = d.get(key, default)
        if v not in options:
            self.fail(f"{path}.{key}", f"expected one of {list(options)}, got {v!r}")
        return v

    def grid(self, v, path) -> tuple:
        if isinstance(v, list):
            vals = v
        elif isinstance(v, dict):
            self.mapping(v, path, {"linspace", "geomspace"})
            if len(v) != 1:
                self.fail(path, "give exactly one of linspace, geomspace")
            kind, args = next(iter(v.items()))
            sub = f"{path}.{kind}"
            if (not isinstance(args, list) or len(args) != 3
                    or isinstance(args[2], bool) or not isinstance(args[2], int)):
                self.fail(sub, "expected [start, stop, count]")
            lo, hi = (self.number({"x": a}, "x", sub) for a in args[:2])
            if args[2] < 1:
                self.fail(sub, "count must be >= 1")
            if kind == "geomspace" and not (lo > 0 and hi > 0):
                self.fail(sub, "geomspace bounds must be > 0")
            vals = (np.linspace if kind == "linspace" else np.geomspace)(lo, hi, args[2]).tolist()
        else:
            self.fail(path, "expected a list of values or {linspace|geomspace: [start, stop, count]}")
        out = []
        for i, x in enumerate(vals):
            out.append(self.number({"x": x}, "x", f"{path}[{i}]", lo=0.0))
        if not out:
            self.fail(path, "empty grid")
        if any(b <= a for a, b in zip(out, out[1:])):
            self.fail(path, "grid values must increase strictly")
        return tuple(out)

    def qubit(self, d) -> QubitParams:
        self.mapping(d, "qubit", {"omega"}, ("omega",))
        return QubitParams(self.number(d, "omega", "qubit", lo=0.0))

    def noise(self, d) -> NoiseModel:
        if not isinstance(d, dict):
            self.fail("noise", "expected a mapping")
        kind = self.choice(d, "kind", "noise", tuple(NOISE_KINDS), None)
        cls = NOISE_KINDS[kind]
        names = [f.name for f in fields(cls)]
        self.mapping(d, "noise", {"kind", *names})
        kw: dict[str, Any] = {}
        if kind == "delta":
            kw["gamma0"] = self.number(d, "gamma0", "noise", lo=0.0)
            kw["gamma1"] = self.number(d, "gamma1", "noise", lo=0.0)
            kw["kBT"] = self.number(d, "kBT", "noise", default=1.0, lo=0.0)
        elif kind == "gaussian":
            for k in ("gamma0", "gamma1"):
                kw[k] = self.number(d, k, "noise", lo=0.0)
            for k in ("alpha0", "alpha1"):
                kw[k] = self.number(d, k, "noise", lo=0.0, strict=True)
        else:
            kw["gamma"] = self.number(d, "gamma", "noise", lo=0.0)
            kw["lam"] = self.number(d, "lam", "noise", lo=0.0, strict=True)
            kw["regime"] = self.choice(d, "regime", "noise", ("zero_t", "high_t"), "zero_t")
            kw["kBT"] = self.number(d, "kBT", "noise", default=0.0, lo=0.0)
            if kw["regime"] == "high_t" and "kBT" not in d:
                self.fail("noise.kBT", "required for regime high_t")
        try:
            return cls(**kw)
        except ValueError as exc:
            self.fail("noise", str(exc))

    def evolve(self, d) -> EvolveBlock:
        names = [f.name for f in fields(EvolveBlock)]
        self.mapping(d, "evolve", set(names))
        dflt = EvolveBlock()
        use_table = d.get("use_table", dflt.use_table)
        if not isinstance(use_table, bool):
            self.fail("evolve.use_table", f"expected true or false, got {use_table!r}")
        return EvolveBlock(
            cycles=self.number(d, "cycles", "evolve", dflt.cycles, lo=0.0, strict=True),
            steps_per_cycle=self.integer(d, "steps_per_cycle", "evolve", dflt.steps_per_cycle, 2),
            sample_every=self.integer(d, "sample_every", "evolve", dflt.sample_every, 1),
            method=self.choice(d, "method", "evolve", ("rk4", "rk45"), dflt.method),
            form=self.choice(d, "form", "evolve", ("bloch", "matrix"), dflt.form),
            use_table=use_table,
            rtol=self.number(d, "rtol", "evolve", dflt.rtol, lo=0.0, strict=True),
            positivity_tol=self.number(d, "positivity_tol", "evolve", dflt.positivity_tol, lo=0.0, strict=True),
        )

    def initial_state(self, v) -> tuple:
        if not isinstance(v, list) or len(v) != 3:
            self.fail("initial_state", "expected a Bloch vector [x, y, z]")
        r = tuple(self.number({"x": x}, "x", f"initial_state[{i}]") for i, x in enumerate(v))
        if math.sqrt(sum(x * x for x in r)) > 1.0 + 1e-12:
            self.fail("initial_state", "Bloch vector must satisfy |R| <= 1")
        return r

    def axis(self, d, path, noise: NoiseModel) -> AxisBlock:
        self.mapping(d, path, {"name", "values", "linspace", "geomspace"}, ("name",))
        name = d["name"]
        allowed = [f.name for f in fields(noise) if f.name != "regime"]
        if name not in allowed:
            self.fail(f"{path}.name", f"{name!r} is not a {noise.kind} noise parameter "
                                      f"(expected one of {allowed})")
        spec = {k: v for k, v in d.items() if k != "name"}
        if len(spec) != 1:
            self.fail(path, "give exactly one of values, linspace, geomspace")
        key, v = next(iter(spec.items()))
        vals = self.grid(v if key == "values" else {key: v}, f"{path}.{key}")
        return AxisBlock(name, vals)

    def sweep(self, d, noise: NoiseModel) -> SweepBlock:
        self.mapping(d, "sweep", {"mode", "quantity", "axis1", "axis2", "gammas", "alphas"})
        mode = self.choice(d, "mode", "sweep", SWEEP_MODES, "grid")
        quantity = self.choice(d, "quantity", "sweep", ("gp_ratio", "final_purity", "final_bloch"),
                               "gp_ratio")
        if mode == "fig8":
            for k in ("axis1", "axis2"):
                if k in d:
                    self.fail(f"sweep.{k}", "not used in fig8 mode (give gammas, alphas)")
            if "gammas" not in d:
                self.fail("sweep.gammas", "missing required key")
            if quantity != "gp_ratio":
                self.fail("sweep.quantity", "fig8 mode computes gp_ratio")
            if noise.kind != "gaussian":
                self.fail("noise.kind", "fig8 mode needs gaussian noise")
            alphas = self.grid(d.get("alphas", [0.03, 10.0]), "sweep.alphas")
            if alphas[0] <= 0:
                self.fail("sweep.alphas", "alphas must be > 0")
            return SweepBlock(mode, quantity, gammas=self.grid(d["gammas"], "sweep.gammas"),
                              alphas=alphas)
        for k in ("gammas", "alphas"):
            if k in d:
                self.fail(f"sweep.{k}", f"only used in fig8 mode")
        if "axis1" not in d:
            self.fail("sweep.axis1", "missing required key")
        a1 = self.axis(d["axis1"], "sweep.axis1", noise)
        a2 = None
        if mode == "grid":
            if "axis2" not in d:
                self.fail("sweep.axis2", "grid mode needs two axes (use mode: slices for one)")
            a2 = self.axis(d["axis2"], "sweep.axis2", noise)
            if a2.name == a1.name:
                self.fail("sweep.axis2.name", "the two axes must name different parameters")
        elif "axis2" in d:
            self.fail("sweep.axis2", "slices mode takes a single axis")
        return SweepBlock(mode, quantity, a1, a2)

    def kernels(self, d, p: QubitParams) -> KernelsBlock:
        self.mapping(d, "kernels", {"t_end", "cycles", "npts"}, ("npts",))
        if ("t_end" in d) == ("cycles" in d):
            self.fail("kernels", "give exactly one of t_end, cycles")
        if "t_end" in d:
            t_end = self.number(d, "t_end", "kernels", lo=0.0, strict=True)
        else:
            t_end = self.number(d, "cycles", "kernels", lo=0.0, strict=True) * p.period
        return KernelsBlock(t_end, self.integer(d, "npts", "kernels", None, 1))

    def run_config(self, d) -> RunConfig:
        if d is None:
            raise ConfigError("empty config")
        self.mapping(d, "", {"name", "qubit", "noise", "evolve", "initial_state", "sweep", "kernels"},
                     ("name", "qubit", "noise"))
        name = d["name"]
        if not isinstance(name, str) or not _NAME_RE.match(name):
            self.fail("name", "expected a file stem of letters, digits, '_', '.', '-'")
        p = self.qubit(d["qubit"])
        noise = self.noise(d["noise"])
        ev = self.evolve(d.get("evolve", {}) or {})
        r0 = self.initial_state(d["initial_state"]) if "initial_state" in d else (0.0, 0.0, 1.0)
        sweep = self.sweep(d["sweep"], noise) if "sweep" in d else None
        kern = self.kernels(d["kernels"], p) if "kernels" in d else None
        return RunConfig(name, p, noise, ev, r0, sweep, kern)
