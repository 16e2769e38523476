import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_field
from vilab.fields import GridSpec, ScalarField, lp_norm, parity_defect, sup_norm
from vilab.initial_data import ConstructionParams, omega0
from vilab.solver import (
    CFLError,
    SolverConfig,
    admissible_dt,
    boundary_contamination,
    conservation_report,
    energy,
    evolve,
    plan_steps,
    step,
    time_derivative,
)


def taylor_green(grid):
    X, Y = grid.mesh()
    return ScalarField(grid, 2 * np.sin(X) * np.sin(Y), is_mean_zero=True)


def test_config_validation():
    for kw in ({"dt": 0.0}, {"cfl": 1.5}, {"hyperviscosity": -1.0}, {"snapshot_every": 0}):
        with pytest.raises(ValueError):
            SolverConfig(**kw)
    with pytest.raises(ValueError, match="hyperviscosity = 0"):
        SolverConfig(hyperviscosity=1e-9).assert_inviscid()


def test_taylor_green_is_steady(grid256):
    w0 = taylor_green(grid256)
    traj = evolve(w0, 0.1, SolverConfig(dt=1e-3))
    assert len(traj.times) == 101 and traj.t_final == pytest.approx(0.1)
    assert np.abs(traj.terminal.values - w0.values).max() <= 1e-8


def test_shear_flow_is_steady(grid256):
    X, Y = grid256.mesh()
    w0 = ScalarField(grid256, np.cos(Y), is_mean_zero=True)
    w = w0
    for _ in range(100):
        w = step(w, SolverConfig(dt=1e-3))
    assert np.abs(w.values - w0.values).max() <= 1e-8


def test_time_derivative_vanishes_on_steady_state_and_matches_steps(grid64):
    assert np.abs(time_derivative(taylor_green(grid64)).values).max() < 1e-13
    w = random_field(grid64, 4, band=6)
    dt = 1e-5
    wt = time_derivative(w).values
    central = (step(w, SolverConfig(dt=dt)).values - step(w, SolverConfig(dt=dt), -dt).values) / (2 * dt)
    assert np.abs(central - wt).max() < 1e-6 * np.abs(wt).max()


def test_cfl_violation_is_refused(grid64):
    w = taylor_green(grid64)
    lim = admissible_dt(w, SolverConfig())
    with pytest.raises(CFLError, match="CFL"):
        step(w, SolverConfig(), dt=2 * lim)
    with pytest.raises(CFLError):
        evolve(w, 1.0, SolverConfig(dt=2 * lim))


@given(st.floats(1e-3, 2.0))
def test_plan_lands_on_horizon(T):
    w = taylor_green(GridSpec(2 * np.pi, 32))
    n, dt = plan_steps(w, T, SolverConfig())
    assert n * dt == pytest.approx(T, rel=1e-14)
    assert dt <= admissible_dt(w, SolverConfig()) * (1 + 1e-12)


def test_mean_zero_required(grid64):
    with pytest.raises(ValueError, match="mean-zero"):
        evolve(ScalarField(grid64, np.zeros((64, 64))), 0.1, SolverConfig())


def test_energy_and_lp_norms_conserved_for_smooth_data(grid64):
    w0 = random_field(grid64, 9, band=5)
    traj = evolve(w0, 0.2, SolverConfig())
    e0, e1 = energy(w0), energy(traj.terminal)
    assert abs(e1 - e0) / e0 < 1e-6
    assert abs(lp_norm(traj.terminal, 2) - lp_norm(w0, 2)) / lp_norm(w0, 2) < 1e-6


def test_odd_odd_symmetry_preserved():
    g = GridSpec(4.0, 256)
    w0 = omega0(ConstructionParams(N=2), g)
    traj = evolve(w0, 0.01, SolverConfig(snapshot_every=4))
    d = parity_defect(traj.terminal)
    assert d[0] < 1e-12 and d[1] < 1e-12


def test_snapshot_cadence(grid64):
    w0 = random_field(grid64, 1, band=4)
    traj = evolve(w0, 0.1, SolverConfig(dt=0.01, snapshot_every=3))
    assert np.allclose(traj.times, [0.0, 0.03, 0.06, 0.09, 0.1])
    assert traj.at(0.06) is traj.snapshots[2]
    with pytest.raises(KeyError):
        traj.at(0.05)


def test_inverse_map_of_shear_flow(grid64):
    X, Y = grid64.mesh()
    w0 = ScalarField(grid64, -np.cos(Y), is_mean_zero=True)  # u = (sin y, 0)
    traj = evolve(w0, 0.5, SolverConfig(dt=0.01), track_inverse_map=True)
    d1, d2 = traj.inverse_map()
    assert np.abs(d1.values + 0.5 * np.sin(Y)).max() < 1e-12
    assert np.abs(d2.values).max() < 1e-14
    a, b = traj.inverse_map(0.0)
    assert not a.values.any() and not b.values.any()
    with pytest.raises(KeyError):
        traj.inverse_map(0.123)


def test_non_finite_run_aborts(grid64):
    w = random_field(grid64, 2)
    with np.errstate(all="ignore"):
        traj = evolve(w, 1e-3, SolverConfig(dt=1e-3, hyperviscosity=1e300))
    assert traj.aborted is not None and "non-finite" in traj.aborted
    assert len(traj.snapshots) == 1


def test_conservation_report_rows(grid64):
    traj = evolve(taylor_green(grid64), 0.02, SolverConfig(dt=0.01))
    rows = conservation_report(traj)
    assert all(r.verdict == "monitored" for r in rows)
    sups = [r.measured for r in rows if r.check == "sup_norm"]
    assert len(sups) == 3 and sups[0] == pytest.approx(2.0, abs=1e-12)


def test_preset_boundary_contamination():
    """Dealiased preset run: frame sup 5.6e-8 at T = 1/27 (Gibbs tails of the
    2/3 truncation); without dealiasing it is 1.7e-12."""
    p = ConstructionParams()
    g = GridSpec()
    w0 = omega0(p, g)
    assert boundary_contamination(w0) == 0.0
    on = boundary_contamination(evolve(w0, p.T_horizon, SolverConfig()).terminal)
    off = boundary_contamination(evolve(w0, p.T_horizon, SolverConfig(dealias=False)).terminal)
    assert on == pytest.approx(5.6e-8, rel=0.1)
    assert off <= 1e-10
    assert sup_norm(w0) > 1e5 * on
    assert math.isfinite(on)
