"""Command line entry point: ``vilab {synth,evolve,flow,verify,sweep}``.

Every subcommand reads one JSON config (``--config``; omitted means the
preset), writes its artifacts under ``--out`` and finishes with
``config.json`` (the resolved config) and ``manifest.json`` (sha256 of every
other output).  Outputs are byte-identical for identical configs at any
``--threads``.

Exit status: 0 when no report row is violated, 1 when some row is, 2 for an
invalid config and 3 when a stage fails (the message names the stage).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import CHECKS, ConfigError, ExperimentConfig, load_config, parse_config
from .fields import ScalarField, VectorField
from .initial_data import beta, omega0n
from .lagrangian import max_entry
from .pipeline import StageError, Workbench, sweep, verify
from .report import fmt
from .solver import SolverConfig, Trajectory, conservation_report, evolve
from .vil import VilError, read_vil, write_vil

__all__ = ["main", "build_parser", "write_manifest", "read_trajectory"]

log = logging.getLogger("vilab")

EXIT_OK, EXIT_VIOLATED, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2, 3

# seed groups written to flow.csv
FLOW_GROUPS = ("origin", "axis1", "axis2", "lattice")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path) -> Path:
    """List every file under ``out`` (except the manifest) with its sha256."""
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    entries = [{"path": p.relative_to(out).as_posix(), "bytes": p.stat().st_size, "sha256": _sha256(p)}
               for p in files]
    path = out / "manifest.json"
    path.write_text(_json({"files": entries}))
    return path


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(cfg: ExperimentConfig, out: Path, args) -> int:
    wb = Workbench(cfg)
    write_vil(out / "omega0.vil", wb.w0)
    prm = _stage("x_star", lambda: wb.params_star)
    made = []
    for n in cfg.experiments.n_list:
        why = prm.perturbation_problem(cfg.grid, n)
        if why is not None:
            log.info("skipping n = %d: %s", n, why)
            continue
        b = beta(prm.with_(n_pert=n), cfg.grid)
        write_vil(out / f"beta_n{n:02d}.vil", b)
        write_vil(out / f"omega0n_n{n:02d}.vil", omega0n(wb.w0, b))
        made.append(n)
    (out / "synth.json").write_text(_json({
        "x_star": list(prm.x_star), "delta": prm.delta, "n_written": made,
        "n_skipped": [n for n in cfg.experiments.n_list if n not in made],
    }))
    return EXIT_OK


def _initial_vorticity(cfg: ExperimentConfig, source: str | None) -> ScalarField:
    if source is None:
        return Workbench(cfg).w0
    f, _ = read_vil(source)
    if not isinstance(f, ScalarField):
        raise VilError(f"{source}: expected a scalar field")
    if f.grid != cfg.grid:
        raise VilError(f"{source}: grid {f.grid} differs from the configured {cfg.grid}")
    return ScalarField(f.grid, f.values, is_mean_zero=True)


def write_trajectory(traj: Trajectory, out: Path) -> None:
    d = out / "traj"
    d.mkdir(parents=True, exist_ok=True)
    for i, (t, w) in enumerate(zip(traj.times, traj.snapshots)):
        write_vil(d / f"w_{i:04d}.vil", w, t)
        if traj.tracers:
            a, b = traj.inverse_map(t)
            write_vil(d / f"inverse_{i:04d}.vil", VectorField(w.grid, a.values, b.values), t)
    c = traj.config
    meta = {
        "times": list(traj.times), "dt": traj.dt, "aborted": traj.aborted,
        "sup_drift": list(traj.sup_drift), "tracers": bool(traj.tracers),
        "solver": {"dt": c.dt, "cfl": c.cfl, "dealias": c.dealias, "hyperviscosity": c.hyperviscosity,
                   "hyperviscosity_order": c.hyperviscosity_order, "snapshot_every": c.snapshot_every},
    }
    (d / "meta.json").write_text(_json(meta))


def read_trajectory(path) -> Trajectory:
    """Rebuild a trajectory written by ``evolve`` (its ``traj`` directory)."""
    d = Path(path)
    if (d / "traj" / "meta.json").exists():
        d = d / "traj"
    meta_path = d / "meta.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"{d}: no meta.json; not a trajectory directory")
    meta = json.loads(meta_path.read_text())
    snaps, tracers = [], {}
    for i, t in enumerate(meta["times"]):
        w, tw = read_vil(d / f"w_{i:04d}.vil")
        if tw != t:
            raise VilError(f"snapshot {i} holds t = {tw}, meta says {t}")
        snaps.append(ScalarField(w.grid, w.values, is_mean_zero=True))
        if meta["tracers"]:
            v, _ = read_vil(d / f"inverse_{i:04d}.vil")
            tracers[t] = (ScalarField(v.grid, v.u1), ScalarField(v.grid, v.u2))
    return Trajectory(list(meta["times"]), snaps, SolverConfig(**meta["solver"]), meta["dt"], tracers,
                      list(meta["sup_drift"]), meta["aborted"])


def _conservation_csv(traj: Trajectory, path: Path):
    rows = [(r.params["t"], r.check, r.measured) for r in conservation_report(traj)]
    _write_csv(path, ["t", "name", "value"], rows)


def cmd_evolve(cfg: ExperimentConfig, out: Path, args) -> int:
    w0 = _stage("synth" if args.input is None else "input", lambda: _initial_vorticity(cfg, args.input))
    traj = _stage("evolve", lambda: evolve(w0, cfg.construction.T_horizon, cfg.solver,
                                           track_inverse_map=True))
    write_trajectory(traj, out)
    _conservation_csv(traj, out / "conservation.csv")
    if traj.aborted:
        log.error("evolve aborted: %s", traj.aborted)
        return EXIT_STAGE
    return EXIT_OK


def cmd_flow(cfg: ExperimentConfig, out: Path, args) -> int:
    wb = Workbench(cfg)
    if args.traj is not None:
        traj = _stage("load trajectory", lambda: read_trajectory(args.traj))
        if traj.grid != cfg.grid:
            raise StageError(f"stage 'load trajectory' failed: grid {traj.grid} differs from {cfg.grid}")
        wb.__dict__["_traj"] = traj
    run = _stage("flow", lambda: wb.run)
    ens0 = run[0]
    idx = np.concatenate([ens0.group(g) for g in FLOW_GROUPS if g in ens0.groups])
    rows = []
    for ens in run:
        J = ens.jacobians
        det = ens.det()
        for i in idx:
            rows.append((ens.t, ens.seeds[i, 0], ens.seeds[i, 1], ens.positions[i, 0], ens.positions[i, 1],
                         J[i, 0, 0], J[i, 0, 1], J[i, 1, 0], J[i, 1, 1], det[i], ens.lambda_integral[i]))
    _write_csv(out / "flow.csv", ["t", "x1", "x2", "eta1", "eta2", "J11", "J12", "J21", "J22", "det",
                                  "lambda_integral"], rows)
    last = run[-1]
    a1, a2 = last.axis_defects()
    summary = {
        "t_final": last.t,
        "max_jacobian_sup": float(max(ens.sup_jacobian() for ens in run)),
        "max_jacobian_sup_final": float(max_entry(last.jacobians).max()),
        "axis_defect_1": max(ens.axis_defects()[0] for ens in run),
        "axis_defect_2": max(ens.axis_defects()[1] for ens in run),
        "axis_defect_final": [a1, a2],
        "stagnation_defect": max(ens.stagnation_defect() for ens in run),
        "det_drift": max(ens.det_drift() for ens in run),
        "boundary_contaminated": bool(last.boundary_contaminated),
        "seed_groups": [g for g in FLOW_GROUPS if g in ens0.groups],
        "seeds_written": int(len(idx)),
    }
    (out / "flow_summary.json").write_text(_json(summary))
    return EXIT_OK


def _report_out(rep, out: Path, stem: str) -> int:
    (out / f"{stem}.csv").write_text(rep.to_csv())
    (out / f"{stem}_verdict.json").write_text(rep.summary_json())
    for r in rep.violated:
        log.warning("violated: %s %s measured=%s reference=%s", r.check, r.params, fmt(r.measured),
                    fmt(r.reference))
    return EXIT_OK if rep.ok else EXIT_VIOLATED


def cmd_verify(cfg: ExperimentConfig, out: Path, args) -> int:
    rep = verify(cfg, args.threads)
    return _report_out(rep, out, "report")


def cmd_sweep(cfg: ExperimentConfig, out: Path, args) -> int:
    rep = sweep(cfg, args.threads)
    return _report_out(rep, out, "sweep")


COMMANDS = {"synth": cmd_synth, "evolve": cmd_evolve, "flow": cmd_flow, "verify": cmd_verify,
            "sweep": cmd_sweep}


def _stage(name, fn):
    try:
        return fn()
    except StageError:
        raise
    except Exception as exc:
        raise StageError(f"stage {name!r} failed: {type(exc).__name__}: {exc}") from exc


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vilab", description="Numerical lab for vorticity norm inflation.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("synth", "write the initial data and perturbations as VIL1 snapshots"),
                        ("evolve", "integrate the vorticity equation and write snapshots"),
                        ("flow", "co-evolve particles and Jacobians over a trajectory"),
                        ("verify", "run checks and write a report"),
                        ("sweep", "run checks over the configured sweep cells")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, default=None, help="JSON config (default: preset)")
        p.add_argument("--out", type=Path, default=None, help="output directory (default: config output)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for independent checks")
        p.add_argument("--check", action="append", default=None,
                       help=f"check name or 'all'; repeatable; one of {', '.join(CHECKS)}")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "evolve":
            p.add_argument("--input", default=None, help="VIL1 scalar snapshot to evolve instead of ω₀")
        if name == "flow":
            p.add_argument("--traj", type=Path, default=None, help="trajectory directory written by evolve")
    return ap


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config is not None else parse_config({})
    if args.check:
        for c in args.check:
            if c != "all" and c not in CHECKS:
                raise ConfigError(f"--check: unknown check {c!r}")
        cfg = replace(cfg, checks=tuple(args.check))
    if args.threads < 1:
        raise ConfigError("--threads: must be >= 1")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out if args.out is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    try:
        code = COMMANDS[args.command](cfg, out, args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (VilError, FileNotFoundError) as exc:
        print(f"error: stage 'input' failed: {exc}", file=sys.stderr)
        return EXIT_STAGE
    (out / "config.json").write_text(_json(cfg.to_dict()))
    write_manifest(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
