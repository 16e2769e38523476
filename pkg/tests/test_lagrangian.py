import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vilab.fields import GridSpec, ScalarField, VectorField
from vilab.lagrangian import (
    BoundaryError,
    FlowEnsemble,
    FrozenVelocity,
    FrozenVorticity,
    HistoryError,
    advected_jacobian,
    as_source,
    axis_seeds,
    comparison_experiment,
    duhamel_split,
    fd_jacobian_check,
    inverse_pullback,
    lattice_seeds,
    max_entry,
    ray_reconstruct,
    ray_seeds,
    run_flow,
    sign_preservation_check,
    stencil_seeds,
)
from vilab.solver import SolverConfig, evolve

G = GridSpec(2 * np.pi, 64)
X, Y = G.mesh()
ZERO = VectorField(G, 0 * X, 0 * X)
SHEAR = VectorField(G, np.sin(Y), 0 * X)
TG = ScalarField(G, 2 * np.sin(X) * np.sin(Y), is_mean_zero=True)


@pytest.fixture(scope="module")
def tg_run():
    traj = evolve(TG, 0.5, SolverConfig(dt=1e-2), track_inverse_map=True)
    base = lattice_seeds(8, 2.0)
    groups = {"lattice": lattice_seeds(16, 2.5), **axis_seeds(9, 2.0), "fd_base": base,
              "fd": stencil_seeds(base, 1e-3)}
    ens = FlowEnsemble.from_groups(groups, rays=[(0.5, 0.5), (1.0, 0.3)], margin=3.0)
    return traj, run_flow(ens, traj)


def test_max_entry_norm():
    J = np.array([[[1.0, -3.0], [2.0, 0.5]]])
    assert max_entry(J)[0] == 3.0


def test_seed_layouts():
    lat = lattice_seeds(8, 1.0)
    assert np.all(np.hypot(*lat.T) < 1.0) and len(lat) == 52
    ax = axis_seeds(5, 1.0)
    assert len(ax["axis1"]) == 4 and np.all(ax["axis1"][:, 0] == 0.0)
    pts, w = ray_seeds((1.0, 2.0), 32)
    assert pts.shape == (34, 2) and w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.array_equal(pts[-2], [1.0, 2.0]) and np.array_equal(pts[-1], [0.0, 0.0])
    with pytest.raises(ValueError):
        ray_seeds((1.0, 0.0), 16)
    st_ = stencil_seeds(np.array([[0.0, 0.0]]), 0.1)
    assert np.allclose(st_, [[0.1, 0], [-0.1, 0], [0, 0.1], [0, -0.1]])


def test_zero_velocity_is_identity():
    ens = FlowEnsemble.from_groups({"a": lattice_seeds(8, 2.0)}, rays=[(0.0, 1.0)])
    r = run_flow(ens, FrozenVelocity(ZERO), 1.0, 10)[-1]
    assert np.array_equal(r.positions, r.seeds)
    assert np.array_equal(r.jacobians, np.broadcast_to(np.eye(2), r.jacobians.shape))
    rr = ray_reconstruct(r, (0.0, 1.0))
    assert rr.residual < 1e-15


@given(st.floats(0.1, 2.0))
def test_shear_flow_is_exact(T):
    ens = FlowEnsemble.from_groups({"a": lattice_seeds(6, 2.0)}, rays=[(0.4, 1.0)])
    r = run_flow(ens, FrozenVelocity(SHEAR), T, 10)[-1]
    s = r.seeds
    assert np.allclose(r.positions[:, 0], s[:, 0] + T * np.sin(s[:, 1]), atol=1e-12)
    assert np.allclose(r.positions[:, 1], s[:, 1], atol=1e-14)
    assert np.allclose(r.jacobians[:, 0, 1], T * np.cos(s[:, 1]), atol=1e-12)
    assert r.det_drift() < 1e-12
    assert duhamel_split(r).max_residual < 1e-10
    rr = ray_reconstruct(r, (0.4, 1.0))
    assert rr.residual < 1e-10 and rr.residual_hat < 1e-10


def test_frozen_source_needs_horizon():
    ens = FlowEnsemble.from_groups({"a": np.zeros((1, 2))})
    with pytest.raises(ValueError, match="T and nsteps"):
        run_flow(ens, FrozenVelocity(SHEAR))


def test_missing_history_and_unknown_ray():
    ens = FlowEnsemble.from_groups({"a": np.zeros((1, 2))})
    with pytest.raises(HistoryError):
        duhamel_split(ens.copy_state(remainder_integral=None))
    with pytest.raises(KeyError, match="ray"):
        ray_reconstruct(ens, (1.0, 1.0))
    with pytest.raises(KeyError, match="group"):
        ens.group("nope")


def test_ray_leaving_box_is_refused():
    ens = FlowEnsemble.from_groups({}, rays=[(0.5, 1.0)], margin=0.6)
    r = run_flow(ens, FrozenVelocity(SHEAR), 1.0, 10)[-1]
    assert r.boundary_contaminated
    with pytest.raises(BoundaryError):
        ray_reconstruct(r, (0.5, 1.0))


def test_as_source_dispatch():
    assert isinstance(as_source(TG), FrozenVorticity)
    assert isinstance(as_source(SHEAR), FrozenVelocity)
    with pytest.raises(TypeError):
        as_source(3.0)


def test_frozen_vorticity_velocity_values():
    pts = np.array([[0.3, 0.7], [-1.2, 2.0]])
    v = as_source(TG).evaluate(0.0, pts)
    x, y = pts.T
    assert np.allclose(v[0], np.sin(x) * np.cos(y), atol=1e-13)
    assert np.allclose(v[1], -np.cos(x) * np.sin(y), atol=1e-13)
    # Du22 = d2 u2 = -cos x cos y, and Du11 + Du22 = 0
    assert np.allclose(v[5], -np.cos(x) * np.cos(y), atol=1e-13)
    assert np.allclose(v[2] + v[5], 0.0, atol=1e-13)


def test_taylor_green_structure(tg_run):
    traj, run = tg_run
    for ens in run:
        assert ens.det_drift() < 1e-8
        assert ens.stagnation_defect() < 1e-14
        assert max(ens.axis_defects()) < 1e-14
        assert duhamel_split(ens).max_residual < 1e-5  # trapezoid error, 1.0e-6 here
    last = run[-1]
    assert len(run) == len(traj.times)
    assert inverse_pullback(traj, last) < 1e-6
    assert fd_jacobian_check(last, "fd_base", "fd", 1e-3) < 1e-5
    J = advected_jacobian(traj, last)
    assert max_entry(J - last.jacobians).max() < 1e-6
    for x in last.rays:
        assert ray_reconstruct(last, x).residual < 1e-6 * math.hypot(*x)


def test_taylor_green_quadrant_is_invariant(tg_run):
    rep = sign_preservation_check(tg_run[1][-1])
    assert rep.fraction == 1.0 and rep.count > 0


def test_lambda_integral_at_origin(tg_run):
    # steady TG: Λ(t, 0) = Du22(0) = -1, so ∫Λ = -t and ∂₂η₂(t, 0) = e^{-t}
    last = tg_run[1][-1]
    i = last.group("origin")[0]
    assert last.lambda_integral[i] == pytest.approx(-0.5, abs=1e-12)
    assert last.jacobians[i, 1, 1] == pytest.approx(math.exp(-0.5), abs=1e-9)


def test_comparison_is_linear_in_amplitude():
    res = comparison_experiment(TG, SHEAR, 1.0, nsteps=50)
    assert abs(res.slope - 1.0) <= 0.15
    assert abs(res.slope_jacobian - 1.0) <= 0.15
    r = np.array(res.lhs) / np.array(res.eps)
    assert r.max() / r.min() <= 1.2
