"""Shared experiment state and the check runners behind ``verify`` and ``sweep``.

A ``Workbench`` computes the base trajectory, the particle runs and the x*
selection once, lazily, so that the checks drawing on them agree on a single
set of inputs.  Check results are assembled in a fixed order, so reports do
not depend on how many worker threads ran them.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from functools import cached_property

import numpy as np

from . import diagnostics as dg
from .config import CHECKS, ExperimentConfig
from .fields import GridSpec, ScalarField
from .initial_data import ConstructionParams, omega0
from .lagrangian import FlowEnsemble, axis_seeds, lattice_seeds, run_flow, stencil_seeds
from .report import DiagnosticsReport, Row, monitor
from .solver import Trajectory, conservation_report, evolve

__all__ = ["Workbench", "StageError", "run_check", "verify", "sweep", "base_ensemble"]

log = logging.getLogger(__name__)

# checks that only need their own small computations
INDEPENDENT = ("lemma_norms", "beta_bounds", "cos2", "lambda_oracle", "growth", "comparison")


class StageError(RuntimeError):
    """A pipeline stage failed; the message names it."""


def base_ensemble(cfg: ExperimentConfig, sector: dg.SectorSpec) -> FlowEnsemble:
    s = cfg.seeds
    grid = cfg.grid
    lat = lattice_seeds(s.lattice_side, s.lattice_radius)
    fd_base = lat[:: s.fd_every]
    groups = {
        "lattice": lat,
        **axis_seeds(s.axis_points, s.lattice_radius),
        "quadrant": sector.nodes,
        "sector": sector.sector_nodes,
        "rim": dg.rim_seeds(cfg.construction, s.rim_points),
        "fd_base": fd_base,
        "fd": stencil_seeds(fd_base, s.fd_spacing_cells * grid.h),
    }
    return FlowEnsemble.from_groups(groups, weights={"quadrant": sector.weights}, rays=s.rays,
                                    ray_nodes=s.ray_nodes, margin=0.4 * grid.L)


class Workbench:
    """Lazily computed base run for one configuration."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._lock = threading.RLock()

    def _once(self, name, fn):
        with self._lock:
            if name not in self.__dict__:
                self.__dict__[name] = fn()
            return self.__dict__[name]

    @property
    def params(self) -> ConstructionParams:
        return self.cfg.construction

    @property
    def grid(self) -> GridSpec:
        return self.cfg.grid

    @property
    def w0(self) -> ScalarField:
        return self._once("_w0", lambda: omega0(self.params, self.grid))

    @property
    def trajectory(self) -> Trajectory:
        return self._once("_traj", lambda: evolve(self.w0, self.params.T_horizon, self.cfg.solver,
                                                  track_inverse_map=True))

    @property
    def trajectory_t0(self) -> Trajectory:
        def make():
            t0, T = self.cfg.t0, self.params.T_horizon
            if t0 > T * (1 + 1e-12):
                raise ValueError(f"t0 = {t0} exceeds the horizon T = {T}")
            if abs(t0 - T) <= 1e-12 * T:
                return self.trajectory
            return evolve(self.w0, t0, self.cfg.solver, track_inverse_map=True)
        return self._once("_traj_t0", make)

    @cached_property
    def sector(self) -> dg.SectorSpec:
        return dg.SectorSpec.from_params(self.params)

    @property
    def run(self) -> list[FlowEnsemble]:
        return self._once("_run", lambda: run_flow(base_ensemble(self.cfg, self.sector), self.trajectory))

    @property
    def x_star(self) -> tuple[tuple[float, float], float]:
        def make():
            if self.cfg.experiments.x_star == "manual":
                return self.params.x_star, self.params.delta
            ens = self.run[-1]
            xs, delta = dg.select_x_star(ens, self.params, self.grid, self.cfg.experiments.n_list)
            log.info("selected x* = %s, delta = %.4g", xs, delta)
            return xs, delta
        return self._once("_xstar", make)

    @property
    def params_star(self) -> ConstructionParams:
        xs, delta = self.x_star
        return replace(self.params, x_star=xs, delta=delta)

    @property
    def products_ensemble(self) -> FlowEnsemble:
        """Base flow at t₀ from the grid nodes of every perturbation support."""
        def make():
            prm = self.params_star
            ns = [n for n in self.cfg.experiments.n_list if prm.perturbation_problem(self.grid, n) is None]
            lam = 3 * min(ns) if ns else prm.lam
            nodes = dg._support_nodes(prm, self.grid, lam)
            xs = np.array([[e1 * prm.x_star[0], e2 * prm.x_star[1]] for e1 in (1, -1) for e2 in (1, -1)])
            ens = FlowEnsemble.from_groups({"beta": nodes, "x_star": xs}, margin=0.4 * self.grid.L)
            return run_flow(ens, self.trajectory_t0, keep="last")[-1]
        return self._once("_products", make)


def _cos2_pairs(cfg: ExperimentConfig):
    rng = np.random.default_rng(cfg.experiments.cos2_seed)
    ns = rng.integers(1, 21, size=cfg.experiments.cos2_pairs)
    xs = rng.uniform(0.1, 2.0, size=cfg.experiments.cos2_pairs)
    return [(3.0 * int(n), float(x)) for n, x in zip(ns, xs)]


def _kato_reference(wb: Workbench) -> Trajectory | None:
    mode = wb.cfg.experiments.kato_reference
    if mode == "none":
        return None
    g = wb.grid
    n = g.n * 2 if mode == "double" else g.n // 2
    ref = GridSpec(g.L, n)
    return evolve(omega0(wb.params, ref), wb.params.T_horizon, wb.cfg.solver)


def _lambda_oracle_rows(wb: Workbench) -> list[Row]:
    cfg = wb.cfg
    L, n = cfg.experiments.oracle_grid
    prm = replace(cfg.construction, N=cfg.experiments.oracle_N)
    rows = dg.check_lambda_oracle(prm, GridSpec(L, n))
    # the configured grid, reported without a verdict
    w = wb.w0
    full = -float(dg.sample_modes(dg._r12_modes(w), wb.grid, np.zeros((1, 2)), method="direct")[0])
    ref = dg.lambda_oracle(wb.params)
    rows.append(monitor("lambda_oracle_configured", {"N": wb.params.N, "L": wb.grid.L, "n": wb.grid.n},
                        full, ref, dg.A_LAMBDA, f"relative error {full / ref - 1.0:.3e}"))
    return rows


def run_check(name: str, wb: Workbench) -> list[Row]:
    """Rows for one named check; failures are re-raised naming the stage."""
    cfg, prm, ex = wb.cfg, wb.params, wb.cfg.experiments
    try:
        if name == "conservation":
            return conservation_report(wb.trajectory)
        if name == "flow":
            return dg.check_flow_structure(wb.trajectory, wb.run, prm.M,
                                           cfg.seeds.fd_spacing_cells * wb.grid.h)
        if name == "lambda_chain":
            return [r for ens in wb.run for r in dg.lambda_lower_bound(wb.trajectory, ens, wb.sector)]
        if name == "sector":
            return dg.sector_ratio_monitor(wb.run, prm.M, prm.T_horizon)
        if name == "riesz":
            return dg.check_riesz_bound(wb.trajectory, wb.run, prm)
        if name == "products":
            xs, delta = wb.x_star
            rows = dg.check_beta_eta_products(wb.products_ensemble, wb.params_star, wb.grid, ex.n_list)
            rows.append(monitor("x_star", {"policy": ex.x_star}, xs[0], xs[1], dg.A_PRODUCTS,
                                f"x* = ({xs[0]!r}, {xs[1]!r}); delta = {delta!r}"))
            return rows
        if name == "inflation":
            return dg.norm_inflation_experiment(wb.params_star, wb.grid, ex.n_list, wb.trajectory_t0,
                                                wb.products_ensemble, cfg.solver)
        if name == "kato_ponce":
            return dg.kato_ponce_monitor(wb.trajectory, prm.p, _kato_reference(wb))
        if name == "lemma_norms":
            return dg.check_lemma_initial_norms(ex.lemma_M, ex.lemma_N, ex.lemma_p,
                                                GridSpec(*ex.lemma_grid), prm.N0)
        if name == "beta_bounds":
            return dg.check_beta_bounds(wb.params_star, wb.grid, ex.n_list)
        if name == "cos2":
            return dg.check_cos2_constant(_cos2_pairs(cfg))
        if name == "lambda_oracle":
            return _lambda_oracle_rows(wb)
        if name == "growth":
            return dg.gradient_growth_experiment(prm.M, ex.growth_N, prm.p, prm.N0,
                                                 GridSpec(*ex.growth_grid), cfg.solver)
        if name == "comparison":
            return dg.check_comparison(ex.comparison_eps)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(f"stage {name!r} failed: {type(exc).__name__}: {exc}") from exc
    raise StageError(f"unknown check {name!r}")


def verify(cfg: ExperimentConfig, threads: int = 1, workbench: Workbench | None = None) -> DiagnosticsReport:
    """Run the selected checks and assemble a sorted report."""
    wb = workbench or Workbench(cfg)
    names = cfg.selected_checks()
    results: dict[str, list[Row]] = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = {n: pool.submit(run_check, n, wb) for n in names if n in INDEPENDENT}
            for n in names:
                if n not in INDEPENDENT:
                    results[n] = run_check(n, wb)
            for n, f in futs.items():
                results[n] = f.result()
    else:
        for n in names:
            results[n] = run_check(n, wb)
    rep = DiagnosticsReport(header=list(dg.REPORT_HEADER))
    for n in CHECKS:
        if n in results:
            rep.extend(results[n])
    return rep.sorted()


_SHARED = ("_w0", "_traj", "_traj_t0", "_run")


def _cell_config(cfg: ExperimentConfig, cell: dict, x_star, delta) -> ExperimentConfig:
    over = {k: v for k, v in cell.items() if k in ("M", "N", "p", "n_pert")}
    prm = replace(cfg.construction.with_(**over), x_star=x_star, delta=delta)
    ex = replace(cfg.experiments, x_star="manual")
    if "n_pert" in cell:
        ex = replace(ex, n_list=(int(cell["n_pert"]),))
    return replace(cfg, construction=prm, experiments=ex)


def sweep(cfg: ExperimentConfig, threads: int = 1) -> DiagnosticsReport:
    """Run the selected checks on every sweep cell; rows carry the cell values.

    Cells that differ only in the perturbation index share one base run and
    one x* choice (made with the configured n list), both fixed before any
    cell is dispatched.
    """
    cells = cfg.sweep.cells()
    if not cells:
        raise StageError("sweep: no sweep axes configured")
    bases: dict = {}
    plan = []
    for cell in cells:
        over = {k: v for k, v in cell.items() if k in ("M", "N", "p")}
        base_cfg = replace(cfg, construction=cfg.construction.with_(**over))
        key = (base_cfg.construction, base_cfg.grid, base_cfg.solver)
        if key not in bases:
            wb = Workbench(base_cfg)
            try:
                xs, delta = wb.x_star
            except Exception as exc:
                raise StageError(f"stage 'x_star' failed for cell {cell}: {exc}") from exc
            bases[key] = (wb, xs, delta)
        wb, xs, delta = bases[key]
        view = Workbench(_cell_config(cfg, cell, xs, delta))
        view.__dict__.update({k: v for k, v in wb.__dict__.items() if k in _SHARED})
        plan.append((cell, view))

    def one(item):
        cell, view = item
        r = verify(view.cfg, 1, view)
        return [replace(row, params={**row.params, **{f"cell_{k}": v for k, v in cell.items()}})
                for row in r.rows]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, plan))
    else:
        parts = [one(item) for item in plan]
    rep = DiagnosticsReport(header=list(dg.REPORT_HEADER))
    for part in parts:
        rep.extend(part)
    return rep.sorted()
