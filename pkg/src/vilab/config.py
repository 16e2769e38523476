"""JSON experiment configuration with fail-fast, path-named validation.

An empty object yields the preset: M = 3, N₀ = 1, N = 3, p = 2.5, L = 8,
n = 1024, dt from the CFL rule and T = M⁻³.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

from .fields import GridSpec
from .initial_data import ConstructionParams
from .solver import SolverConfig

__all__ = ["ConfigError", "SeedLayout", "Experiments", "SweepAxes", "ExperimentConfig", "load_config",
           "parse_config", "CHECKS"]

CHECKS = (
    "conservation",
    "flow",
    "lambda_chain",
    "sector",
    "riesz",
    "products",
    "inflation",
    "kato_ponce",
    "lemma_norms",
    "beta_bounds",
    "cos2",
    "lambda_oracle",
    "growth",
    "comparison",
)


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending JSON path."""


@dataclass(frozen=True)
class SeedLayout:
    lattice_side: int = 64
    lattice_radius: float = 1.5
    axis_points: int = 65
    rays: tuple = ((0.5, 0.5), (0.3, 1.0), (1.0, 0.2))
    ray_nodes: int = 128
    fd_every: int = 16
    fd_spacing_cells: float = 4.0
    rim_points: int = 64

    def __post_init__(self):
        if self.lattice_side < 2:
            raise ValueError("lattice_side must be >= 2")
        if self.ray_nodes < 32:
            raise ValueError("ray_nodes must be >= 32")
        if self.axis_points < 3:
            raise ValueError("axis_points must be >= 3")
        object.__setattr__(self, "rays", tuple(tuple(float(c) for c in r) for r in self.rays))
        for r in self.rays:
            if len(r) != 2:
                raise ValueError("each ray endpoint must be a 2D point")


@dataclass(frozen=True)
class Experiments:
    n_list: tuple = (1, 2, 3, 4, 5, 6, 7, 8)
    t0: float | None = None
    x_star: str = "auto"
    lemma_M: tuple = (2.0, 3.0, 4.0)
    lemma_N: tuple = (1, 2, 3, 4, 5)
    lemma_p: tuple = (2.1, 2.5, 3.0)
    lemma_grid: tuple = (2.0, 1024)
    growth_N: tuple = (1, 2, 3, 4, 5)
    growth_grid: tuple = (2.0, 1024)
    oracle_N: int = 1
    oracle_grid: tuple = (16.0, 4096)
    cos2_pairs: int = 10
    cos2_seed: int = 0
    kato_reference: str = "double"
    comparison_eps: tuple = (1e-2, 5e-3, 2.5e-3)

    def __post_init__(self):
        if self.x_star not in ("auto", "manual"):
            raise ValueError("x_star must be 'auto' or 'manual'")
        if self.kato_reference not in ("double", "halve", "none"):
            raise ValueError("kato_reference must be 'double', 'halve' or 'none'")
        for name in ("n_list", "lemma_M", "lemma_N", "lemma_p", "growth_N", "comparison_eps"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise ValueError("n_list entries must be positive integers")
        for name in ("lemma_grid", "growth_grid", "oracle_grid"):
            g = tuple(getattr(self, name))
            GridSpec(float(g[0]), int(g[1]))
            object.__setattr__(self, name, (float(g[0]), int(g[1])))
        if self.t0 is not None and not self.t0 > 0:
            raise ValueError("t0 must be positive")


@dataclass(frozen=True)
class SweepAxes:
    M: tuple = ()
    N: tuple = ()
    p: tuple = ()
    n_pert: tuple = ()
    cap: int = 256

    def __post_init__(self):
        for name in ("M", "N", "p", "n_pert"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.size > self.cap:
            raise ValueError(f"sweep has {self.size} cells, above the cap {self.cap}")

    @property
    def axes(self) -> dict:
        return {k: getattr(self, k) for k in ("M", "N", "p", "n_pert") if getattr(self, k)}

    @property
    def size(self) -> int:
        out = 1
        for v in self.axes.values():
            out *= len(v)
        return out if self.axes else 0

    def cells(self) -> list[dict]:
        ax = self.axes
        if not ax:
            return []
        keys = list(ax)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(ax[k] for k in keys))]


@dataclass(frozen=True)
class ExperimentConfig:
    construction: ConstructionParams = field(default_factory=ConstructionParams)
    grid: GridSpec = field(default_factory=GridSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    seeds: SeedLayout = field(default_factory=SeedLayout)
    experiments: Experiments = field(default_factory=Experiments)
    sweep: SweepAxes = field(default_factory=SweepAxes)
    checks: tuple = ("all",)
    output: str = "out"

    @property
    def t0(self) -> float:
        return self.construction.T_horizon if self.experiments.t0 is None else self.experiments.t0

    def selected_checks(self) -> tuple:
        return CHECKS if "all" in self.checks else tuple(c for c in CHECKS if c in self.checks)

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _build(cls, data, path: str, rename: dict | None = None):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    rename = rename or {}
    kw = {}
    for key, val in data.items():
        name = rename.get(key, key)
        if name not in names:
            raise ConfigError(f"{path}.{key}: unknown field")
        if isinstance(val, list):
            val = tuple(tuple(v) if isinstance(v, list) else v for v in val)
        kw[name] = val
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        bad = _guess_field(str(exc), kw)
        back = {v: k for k, v in rename.items() if k in data}
        bad = back.get(bad, bad)
        where = f"{path}.{bad}" if bad else path
        raise ConfigError(f"{where}: {exc}") from None


def _guess_field(msg: str, kw: dict) -> str | None:
    for k in kw:
        if msg.startswith(k) or f" {k} " in f" {msg} " or msg.startswith(k.replace("_", " ")):
            return k
    return next(iter(kw), None) if len(kw) == 1 else None


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("$: expected a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(f"$.{key}: unknown field")
    kw = {}
    if "construction" in data:
        c = dict(data["construction"])
        if "x_star" in c and isinstance(c["x_star"], list):
            c["x_star"] = tuple(c["x_star"])
        kw["construction"] = _build(ConstructionParams, c, "$.construction")
    if "grid" in data:
        kw["grid"] = _build(GridSpec, data["grid"], "$.grid", {"L": "side_length", "n": "points_per_side"})
    if "solver" in data:
        kw["solver"] = _build(SolverConfig, data["solver"], "$.solver")
    if "seeds" in data:
        kw["seeds"] = _build(SeedLayout, data["seeds"], "$.seeds")
    exp = dict(data.get("experiments", {}))
    if "construction" in data and "x_star" in data["construction"] and "x_star" not in exp:
        exp["x_star"] = "manual"
    if exp:
        kw["experiments"] = _build(Experiments, exp, "$.experiments")
    if "sweep" in data:
        kw["sweep"] = _build(SweepAxes, data["sweep"], "$.sweep")
    if "checks" in data:
        chk = data["checks"]
        if isinstance(chk, str):
            chk = [chk]
        for i, c in enumerate(chk):
            if c != "all" and c not in CHECKS:
                raise ConfigError(f"$.checks[{i}]: unknown check {c!r}")
        kw["checks"] = tuple(chk)
    if "output" in data:
        if not isinstance(data["output"], str):
            raise ConfigError("$.output: expected a string")
        kw["output"] = data["output"]
    cfg = ExperimentConfig(**kw)
    try:
        cfg.construction.check_resolvable(cfg.grid)
    except ValueError as exc:
        raise ConfigError(f"$.grid: {exc}") from None
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"$: config file {p} does not exist")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"$: invalid JSON ({exc})") from None
    return parse_config(data)
