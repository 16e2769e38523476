"""Pseudo-spectral RK4 integration of ω_t + u·∇ω = 0 with u = ∇⊥Δ⁻¹ω."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    GridSpec,
    ScalarField,
    _wavenumbers,
    biot_savart,
    lp_norm,
    parity_defect,
    sup_norm,
)
from .report import Row, monitor

__all__ = [
    "SolverConfig",
    "Trajectory",
    "CFLError",
    "admissible_dt",
    "time_derivative",
    "step",
    "evolve",
    "conservation_report",
    "boundary_contamination",
    "energy",
]

log = logging.getLogger(__name__)


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    dt: float | None = None
    cfl: float = 0.5
    dealias: bool = True
    hyperviscosity: float = 0.0
    hyperviscosity_order: int = 4
    snapshot_every: int = 1

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.hyperviscosity < 0:
            raise ValueError("hyperviscosity must be >= 0")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")

    def assert_inviscid(self):
        if self.hyperviscosity != 0.0:
            raise ValueError("verification runs require hyperviscosity = 0")


@dataclass
class Trajectory:
    times: list[float]
    snapshots: list[ScalarField]
    config: SolverConfig
    dt: float
    tracers: dict[float, tuple[ScalarField, ScalarField]] = field(default_factory=dict)
    sup_drift: list[float] = field(default_factory=list)
    aborted: str | None = None

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def grid(self) -> GridSpec:
        return self.snapshots[0].grid

    @property
    def t_final(self) -> float:
        return self.times[-1]

    @property
    def terminal(self) -> ScalarField:
        return self.snapshots[-1]

    def at(self, t: float) -> ScalarField:
        i = self.index(t)
        return self.snapshots[i]

    def index(self, t: float) -> int:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t = {t}")
        return i

    def inverse_map(self, t: float | None = None):
        """Displacement fields (X₁ - x₁, X₂ - x₂) of the back-to-label map at ``t``."""
        t = self.t_final if t is None else t
        for s, d in self.tracers.items():
            if abs(s - t) <= 1e-12 * max(1.0, abs(t)):
                return d
        raise KeyError(f"no inverse-map tracer stored at t = {t}")


def _dealias_mask(grid: GridSpec) -> np.ndarray:
    K1, K2, *_ = _wavenumbers(grid.L, grid.n)
    kmax = math.pi / grid.h
    cut = (2.0 / 3.0) * kmax
    return (np.abs(K1) < cut) & (np.abs(K2) < cut)


def _velocity_hat(what: np.ndarray, grid: GridSpec):
    _, _, K1o, K2o, _, ksq_safe = _wavenumbers(grid.L, grid.n)
    psi = -what / ksq_safe
    psi[0, 0] = 0.0
    return -1j * K2o * psi, 1j * K1o * psi


def _irfft(c, grid):
    return np.fft.irfft2(c, s=(grid.n, grid.n))


def _advect_hat(u1, u2, fhat, grid, mask):
    """Spectrum of u·∇f (dealiased when ``mask`` is given)."""
    _, _, K1o, K2o, _, _ = _wavenumbers(grid.L, grid.n)
    nl = u1 * _irfft(1j * K1o * fhat, grid) + u2 * _irfft(1j * K2o * fhat, grid)
    out = np.fft.rfft2(nl)
    if mask is not None:
        out *= mask
    return out


def _rhs(state: list[np.ndarray], grid: GridSpec, cfg: SolverConfig):
    what = state[0]
    u1h, u2h = _velocity_hat(what, grid)
    u1, u2 = _irfft(u1h, grid), _irfft(u2h, grid)
    mask = _dealias_mask(grid) if cfg.dealias else None
    dw = -_advect_hat(u1, u2, what, grid, mask)
    dw[0, 0] = 0.0
    if cfg.hyperviscosity:
        *_, ksq, _ = _wavenumbers(grid.L, grid.n)
        dw -= cfg.hyperviscosity * ksq**cfg.hyperviscosity_order * what
    out = [dw]
    # displacement of the back-to-label map: D_t + u·∇D + u = 0
    for i, fh in enumerate(state[1:]):
        d = -_advect_hat(u1, u2, fh, grid, mask) - (u1h, u2h)[i]
        out.append(d)
    return out


def _rk4(state, dt, grid, cfg):
    k1 = _rhs(state, grid, cfg)
    k2 = _rhs([s + 0.5 * dt * k for s, k in zip(state, k1)], grid, cfg)
    k3 = _rhs([s + 0.5 * dt * k for s, k in zip(state, k2)], grid, cfg)
    k4 = _rhs([s + dt * k for s, k in zip(state, k3)], grid, cfg)
    return [s + dt / 6.0 * (a + 2 * b + 2 * c + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4)]


def admissible_dt(w: ScalarField, cfg: SolverConfig) -> float:
    u = biot_savart(w)
    umax = float(np.max(u.magnitude()))
    return cfg.cfl * w.grid.h / max(1.0, umax)


def time_derivative(w: ScalarField, cfg: SolverConfig | None = None) -> ScalarField:
    """ω_t = -u·∇ω as the solver evaluates it."""
    cfg = cfg or SolverConfig()
    if not w.is_mean_zero:
        raise ValueError("vorticity must be mean-zero")
    d = _rhs([np.fft.rfft2(w.values)], w.grid, cfg)[0]
    return ScalarField(w.grid, _irfft(d, w.grid), is_mean_zero=True)


def _check_cfl(w: ScalarField, dt: float, cfg: SolverConfig):
    lim = admissible_dt(w, cfg)
    if dt > lim * (1 + 1e-12):
        raise CFLError(f"dt = {dt:.6g} violates the CFL limit; admissible dt <= {lim:.6g}")


def step(w: ScalarField, cfg: SolverConfig, dt: float | None = None) -> ScalarField:
    """One RK4 step of the vorticity equation."""
    if not w.is_mean_zero:
        raise ValueError("vorticity must be mean-zero")
    dt = cfg.dt if dt is None else dt
    if dt is None:
        dt = admissible_dt(w, cfg)
    _check_cfl(w, dt, cfg)
    new = _rk4([np.fft.rfft2(w.values)], dt, w.grid, cfg)[0]
    return ScalarField(w.grid, _irfft(new, w.grid), is_mean_zero=True)


def plan_steps(w0: ScalarField, T: float, cfg: SolverConfig) -> tuple[int, float]:
    """Uniform step count and size landing exactly on ``T``."""
    if T <= 0:
        return 0, 0.0
    lim = admissible_dt(w0, cfg)
    target = lim if cfg.dt is None else cfg.dt
    if target > lim * (1 + 1e-12):
        raise CFLError(f"dt = {target:.6g} violates the CFL limit; admissible dt <= {lim:.6g}")
    nsteps = max(1, math.ceil(T / target * (1 - 1e-12)))
    return nsteps, T / nsteps


def evolve(w0: ScalarField, T: float, cfg: SolverConfig, track_inverse_map: bool = False,
           nsteps: int | None = None) -> Trajectory:
    """Integrate to time ``T``; snapshots every ``cfg.snapshot_every`` steps plus the end.

    With ``track_inverse_map`` the displacement of the back-to-label map is
    advected alongside ω and stored at every snapshot.
    """
    if not w0.is_mean_zero:
        raise ValueError("vorticity must be mean-zero")
    grid = w0.grid
    if nsteps is None:
        nsteps, dt = plan_steps(w0, T, cfg)
    else:
        dt = T / nsteps if nsteps else 0.0
        if nsteps:
            _check_cfl(w0, dt, cfg)
    sup0 = sup_norm(w0)
    zero = ScalarField(grid, np.zeros((grid.n, grid.n)))
    traj = Trajectory([0.0], [w0], cfg, dt, sup_drift=[0.0])
    if track_inverse_map:
        traj.tracers[0.0] = (zero, zero)
    state = [np.fft.rfft2(w0.values)]
    if track_inverse_map:
        state += [np.zeros_like(state[0]), np.zeros_like(state[0])]
    for i in range(1, nsteps + 1):
        new = _rk4(state, dt, grid, cfg)
        wv = _irfft(new[0], grid)
        if not np.all(np.isfinite(wv)):
            traj.aborted = f"non-finite vorticity at step {i} (t = {i * dt:.6g})"
            log.error(traj.aborted)
            break
        state = new
        if i % cfg.snapshot_every and i != nsteps:
            continue
        t = T if i == nsteps else i * dt
        w = ScalarField(grid, wv, is_mean_zero=True)
        traj.times.append(t)
        traj.snapshots.append(w)
        traj.sup_drift.append(abs(sup_norm(w) - sup0) / sup0 if sup0 else 0.0)
        if track_inverse_map:
            traj.tracers[t] = tuple(ScalarField(grid, _irfft(s, grid)) for s in state[1:])
    return traj


def energy(w: ScalarField) -> float:
    """Kinetic energy ‖u‖²_{L²}."""
    u = biot_savart(w)
    return float(w.grid.cell_area() * np.sum(u.u1**2 + u.u2**2))


def boundary_contamination(w: ScalarField, frame: float = 0.1) -> float:
    """sup|ω| over the outer ``frame`` fraction of the box."""
    m = max(1, int(round(frame * w.grid.n)))
    v = np.abs(w.values)
    return float(max(v[:m].max(), v[-m:].max(), v[:, :m].max(), v[:, -m:].max()))


def conservation_report(traj: Trajectory, ps=(2.0, 2.5, 3.0)) -> list[Row]:
    if not traj.snapshots:
        raise ValueError("empty trajectory")
    anchor = "conservation monitors (bounded-vorticity run)"
    rows = []
    for t, w in zip(traj.times, traj.snapshots):
        prm = {"t": t}
        rows.append(monitor("sup_norm", prm, sup_norm(w), None, anchor))
        for p in ps:
            rows.append(monitor(f"lp_norm_p{p:g}", prm, lp_norm(w, p), None, anchor))
        rows.append(monitor("energy", prm, energy(w), None, anchor))
        for name, v in zip(("odd1", "odd2", "even1", "even2"), parity_defect(w)):
            rows.append(monitor(f"parity_{name}", prm, v, None, anchor))
        rows.append(monitor("boundary_contamination", prm, boundary_contamination(w), None, anchor))
    return rows
