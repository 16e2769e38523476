"""Particle flow maps, deformation gradients and the diagonal/remainder split.

Particles solve dη/dt = u(t, η) together with dDη/dt = Du(t, η)·Dη.  For a
velocity given by a vorticity, Du = [[-R₁₂ω, -R₂₂ω], [R₁₁ω, R₁₂ω]], and
Λ = R₁₂ω(t, η) drives the exponential part A = diag(e^{-∫Λ}, e^{∫Λ}) of Dη.
The remainder is B = Dη - A.  An independent estimate B̂ comes from the
variation-of-constants integral, accumulated on the fly with the trapezoid
rule:

    B̂(t) = diag(e^{-I(t)}, e^{I(t)}) ∫₀ᵗ diag(e^{I}, e^{-I}) P Dη dτ,
    P = Du - diag(-Λ, Λ),  I = ∫₀ᵗ Λ dτ.

Fields are sampled at particle positions by evaluating the trigonometric
interpolant exactly, so every velocity source reduces to six sets of centred
Fourier modes (u₁, u₂, ∂₁u₁, ∂₂u₁, ∂₁u₂, ∂₂u₂).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fields import (
    GridSpec,
    ScalarField,
    VectorField,
    centred_modes,
    centred_wavenumbers,
    sample_modes,
    sup_norm,
)
from .quadrature import gauss_legendre_unit
from .solver import Trajectory, time_derivative

__all__ = [
    "FlowEnsemble",
    "DuhamelSplit",
    "RayResult",
    "ComparisonResult",
    "VelocitySource",
    "TrajectoryVelocity",
    "FrozenVorticity",
    "FrozenVelocity",
    "SumVelocity",
    "HistoryError",
    "BoundaryError",
    "as_source",
    "advance",
    "run_flow",
    "duhamel_split",
    "ray_reconstruct",
    "inverse_pullback",
    "sign_preservation_check",
    "comparison_experiment",
    "fd_jacobian_check",
    "advected_jacobian",
    "lattice_seeds",
    "axis_seeds",
    "ray_seeds",
    "stencil_seeds",
    "max_entry",
]


class HistoryError(RuntimeError):
    """The remainder integral was not accumulated from t = 0."""


class BoundaryError(RuntimeError):
    """Particles needed by a computation left the safe box."""


def max_entry(J: np.ndarray) -> np.ndarray:
    """Matrix sup norm (largest absolute entry) over the trailing 2×2 axes."""
    return np.abs(J).max(axis=(-2, -1))


# ---------------------------------------------------------------------------
# velocity sources


def _vorticity_to_modes(w_modes: np.ndarray, grid: GridSpec) -> np.ndarray:
    """(u₁, u₂, Du₁₁, Du₁₂, Du₂₁, Du₂₂) modes from centred vorticity modes."""
    k, ko = centred_wavenumbers(grid)
    k1, k2 = k[:, None], k[None, :]
    k1o, k2o = ko[:, None], ko[None, :]
    ksq = k1**2 + k2**2
    c = len(k) // 2
    ksq[c, c] = 1.0
    w = w_modes.copy()
    w[c, c] = 0.0
    psi = -w / ksq
    r11 = k1**2 / ksq * w
    r22 = k2**2 / ksq * w
    r12 = (k1o * k2o) / ksq * w
    return np.stack([-1j * k2o * psi, 1j * k1o * psi, -r12, -r22, r11, r12])


def _velocity_to_modes(u1: np.ndarray, u2: np.ndarray, grid: GridSpec) -> np.ndarray:
    k, ko = centred_wavenumbers(grid)
    d1, d2 = 1j * ko[:, None], 1j * ko[None, :]
    a, b = centred_modes(np.stack([u1, u2]))
    return np.stack([a, b, d1 * a, d2 * a, d1 * b, d2 * b])


class VelocitySource:
    """Anything that yields the six velocity mode arrays at a time ``t``."""

    grid: GridSpec

    def modes(self, t: float) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def covers(self, t0: float, t1: float) -> bool:
        return True

    def evaluate(self, t: float, points: np.ndarray) -> np.ndarray:
        """Rows u₁, u₂, Du₁₁, Du₁₂, Du₂₁, Du₂₂ at ``points``; shape (6, m)."""
        return sample_modes(self.modes(t), self.grid, points)

    def __add__(self, other: "VelocitySource") -> "SumVelocity":
        return SumVelocity(self, other)


class FrozenVorticity(VelocitySource):
    """Time-independent velocity induced by a vorticity field."""

    def __init__(self, w: ScalarField):
        self.grid = w.grid
        self._modes = _vorticity_to_modes(centred_modes(w.values), w.grid)

    def modes(self, t):
        return self._modes


class FrozenVelocity(VelocitySource):
    """Time-independent velocity field given directly, e.g. a shear."""

    def __init__(self, u: VectorField, scale: float = 1.0):
        self.grid = u.grid
        self._modes = scale * _velocity_to_modes(u.u1, u.u2, u.grid)

    def modes(self, t):
        return self._modes


class SumVelocity(VelocitySource):
    def __init__(self, a: VelocitySource, b: VelocitySource):
        if a.grid != b.grid:
            raise ValueError("summed velocities must share one grid")
        self.grid, self.a, self.b = a.grid, a, b

    def modes(self, t):
        return self.a.modes(t) + self.b.modes(t)

    def covers(self, t0, t1):
        return self.a.covers(t0, t1) and self.b.covers(t0, t1)


class TrajectoryVelocity(VelocitySource):
    """Velocity of a solver trajectory, cubic Hermite in time between snapshots.

    Snapshot slopes are the solver's own ω_t, so the interpolant is C¹ and
    fourth-order accurate; at snapshot times the stored field is used as is.
    """

    def __init__(self, traj: Trajectory, cache_size: int = 4):
        self.traj = traj
        self.grid = traj.grid
        self.times = np.asarray(traj.times, dtype=float)
        self._slopes: dict[int, np.ndarray] = {}
        self._cache_size = cache_size
        self._last: tuple[float, np.ndarray] | None = None

    def covers(self, t0, t1):
        eps = 1e-12 * max(1.0, abs(self.times[-1]))
        return t0 >= self.times[0] - eps and t1 <= self.times[-1] + eps

    def _slope(self, i: int) -> np.ndarray:
        if i not in self._slopes:
            if len(self._slopes) >= self._cache_size:
                self._slopes.pop(next(iter(self._slopes)))
            cfg = replace(self.traj.config, dt=None)
            self._slopes[i] = time_derivative(self.traj.snapshots[i], cfg).values
        return self._slopes[i]

    def vorticity(self, t: float) -> np.ndarray:
        ts = self.times
        eps = 1e-12 * max(1.0, abs(ts[-1]))
        if not (ts[0] - eps <= t <= ts[-1] + eps):
            raise ValueError(f"t = {t} outside the trajectory range [{ts[0]}, {ts[-1]}]")
        j = int(np.argmin(np.abs(ts - t)))
        if abs(ts[j] - t) <= eps:
            return self.traj.snapshots[j].values
        i = int(np.searchsorted(ts, t)) - 1
        i = min(max(i, 0), len(ts) - 2)
        H = ts[i + 1] - ts[i]
        s = (t - ts[i]) / H
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        a, b = self.traj.snapshots[i].values, self.traj.snapshots[i + 1].values
        return h00 * a + h01 * b + H * (h10 * self._slope(i) + h11 * self._slope(i + 1))

    def modes(self, t):
        if self._last is not None and self._last[0] == t:
            return self._last[1]
        m = _vorticity_to_modes(centred_modes(self.vorticity(t)), self.grid)
        self._last = (t, m)
        return m


def as_source(obj) -> VelocitySource:
    """Wrap a trajectory, a vorticity or a velocity field as a velocity source."""
    if isinstance(obj, VelocitySource):
        return obj
    if isinstance(obj, Trajectory):
        src = getattr(obj, "_velocity_source", None)
        if src is None:
            src = TrajectoryVelocity(obj)
            obj._velocity_source = src
        return src
    if isinstance(obj, ScalarField):
        return FrozenVorticity(obj)
    if isinstance(obj, VectorField):
        return FrozenVelocity(obj)
    raise TypeError(f"cannot build a velocity source from {type(obj).__name__}")


# ---------------------------------------------------------------------------
# seed layouts


def lattice_seeds(n_side: int = 64, radius: float = 1.5) -> np.ndarray:
    """Cell-centred ``n_side``² lattice on [-r, r]², restricted to the disk B(0, r)."""
    s = -radius + (np.arange(n_side) + 0.5) * (2.0 * radius / n_side)
    X1, X2 = np.meshgrid(s, s, indexing="ij")
    pts = np.stack([X1.ravel(), X2.ravel()], axis=1)
    return pts[np.hypot(pts[:, 0], pts[:, 1]) < radius]


def axis_seeds(m: int = 33, extent: float = 1.5) -> dict[str, np.ndarray]:
    """Seeds on x₁ = 0 ("axis1") and x₂ = 0 ("axis2") plus the origin."""
    s = np.linspace(-extent, extent, m)
    s = s[s != 0.0]
    z = np.zeros_like(s)
    return {
        "axis1": np.stack([z, s], axis=1),
        "axis2": np.stack([s, z], axis=1),
        "origin": np.zeros((1, 2)),
    }


def ray_seeds(x, m: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes r_j·x on the ray (0, 1)·x, then x, then the origin.

    Returns (points (m + 2, 2), weights (m,)).
    """
    if m < 32:
        raise ValueError("ray reconstruction needs at least 32 nodes")
    r, w = gauss_legendre_unit(m)
    x = np.asarray(x, dtype=float)
    pts = np.concatenate([r[:, None] * x[None, :], x[None, :], np.zeros((1, 2))])
    return pts, np.array(w)


def stencil_seeds(points, spacing: float) -> np.ndarray:
    """Central-difference partners: blocks x+s e₁, x-s e₁, x+s e₂, x-s e₂."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    e1, e2 = np.array([spacing, 0.0]), np.array([0.0, spacing])
    return np.concatenate([p + e1, p - e1, p + e2, p - e2])


# ---------------------------------------------------------------------------
# ensembles


@dataclass
class FlowEnsemble:
    """Particles with positions, deformation gradients and Λ integrals at time ``t``.

    ``groups`` maps a layout name to the indices of its seeds; ``weights``
    holds quadrature weights for layouts that carry them and ``rays`` the
    ray layouts registered for reconstruction.
    """

    seeds: np.ndarray
    positions: np.ndarray
    jacobians: np.ndarray
    lambda_integral: np.ndarray
    t: float = 0.0
    groups: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    rays: dict = field(default_factory=dict)
    remainder_integral: np.ndarray | None = None
    max_jacobian: float = 1.0
    margin: float | None = None
    boundary_contaminated: bool = False
    _state: tuple | None = field(default=None, repr=False)

    @classmethod
    def from_groups(cls, groups: dict, weights: dict | None = None, rays=(), ray_nodes: int = 128,
                    margin: float | None = None) -> "FlowEnsemble":
        """Identity-flow ensemble at t = 0 from named seed sets plus ray layouts."""
        chunks, index, start = [], {}, 0
        for name, pts in groups.items():
            pts = np.asarray(pts, dtype=float).reshape(-1, 2)
            chunks.append(pts)
            index[name] = np.arange(start, start + len(pts))
            start += len(pts)
        ray_meta = {}
        for x in rays:
            pts, w = ray_seeds(x, ray_nodes)
            chunks.append(pts)
            idx = np.arange(start, start + len(pts))
            start += len(pts)
            key = (float(x[0]), float(x[1]))
            ray_meta[key] = {"nodes": idx[:-2], "end": idx[-2], "origin": idx[-1], "weights": w}
        seeds = np.concatenate(chunks) if chunks else np.zeros((0, 2))
        m = len(seeds)
        jac = np.broadcast_to(np.eye(2), (m, 2, 2)).copy()
        w = {k: np.asarray(v, dtype=float) for k, v in (weights or {}).items()}
        for k, v in w.items():
            if k not in index or len(v) != len(index[k]):
                raise ValueError(f"weights for {k!r} do not match its seeds")
        return cls(seeds, seeds.copy(), jac, np.zeros(m), 0.0, index, w, ray_meta,
                   np.zeros((m, 2, 2)), 1.0, margin)

    @property
    def size(self) -> int:
        return len(self.seeds)

    @property
    def has_history(self) -> bool:
        return self.remainder_integral is not None

    def group(self, name: str) -> np.ndarray:
        if name not in self.groups:
            raise KeyError(f"no seed group {name!r}; have {sorted(self.groups)}")
        return self.groups[name]

    def det(self) -> np.ndarray:
        J = self.jacobians
        return J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]

    def det_drift(self, name: str | None = None) -> float:
        d = np.abs(self.det() - 1.0)
        if name is not None:
            d = d[self.group(name)]
        return float(d.max()) if d.size else 0.0

    def axis_defects(self) -> tuple[float, float]:
        """max |η₁| over seeds with x₁ = 0 and max |η₂| over seeds with x₂ = 0."""
        on1 = self.seeds[:, 0] == 0.0
        on2 = self.seeds[:, 1] == 0.0
        d1 = float(np.abs(self.positions[on1, 0]).max()) if on1.any() else 0.0
        d2 = float(np.abs(self.positions[on2, 1]).max()) if on2.any() else 0.0
        return d1, d2

    def stagnation_defect(self) -> float:
        at0 = np.all(self.seeds == 0.0, axis=1)
        if not at0.any():
            raise KeyError("no seed at the origin")
        return float(np.hypot(*self.positions[at0].T).max())

    def sup_jacobian(self, name: str | None = None) -> float:
        J = self.jacobians if name is None else self.jacobians[self.group(name)]
        return float(max_entry(J).max()) if len(J) else 0.0

    def copy_state(self, **kw) -> "FlowEnsemble":
        return replace(self, **kw)


def _split_fields(vals: np.ndarray):
    u = vals[:2].T
    G = vals[2:].T.reshape(-1, 2, 2)
    return u, G


def _remainder_integrand(G: np.ndarray, J: np.ndarray, I: np.ndarray) -> np.ndarray:
    lam = G[:, 1, 1]
    P = G.copy()
    P[:, 0, 0] += lam
    P[:, 1, 1] = 0.0
    PJ = P @ J
    PJ[:, 0, :] *= np.exp(I)[:, None]
    PJ[:, 1, :] *= np.exp(-I)[:, None]
    return PJ


def _outside(ens: FlowEnsemble, pos: np.ndarray) -> bool:
    return ens.margin is not None and bool(np.any(np.abs(pos) > ens.margin))


def advance(ensemble: FlowEnsemble, traj, dt: float) -> FlowEnsemble:
    """One RK4 step of (η, Dη) plus trapezoid updates of ∫Λ and the remainder integral."""
    src = as_source(traj)
    t0, t1 = ensemble.t, ensemble.t + dt
    if not src.covers(t0, t1):
        raise ValueError(f"velocity source does not cover [{t0}, {t1}]")
    X, J = ensemble.positions, ensemble.jacobians
    if ensemble._state is not None and ensemble._state[0] == t0:
        u1, G1 = ensemble._state[1], ensemble._state[2]
    else:
        u1, G1 = _split_fields(src.evaluate(t0, X))
    K1 = G1 @ J
    u2, G2 = _split_fields(src.evaluate(t0 + 0.5 * dt, X + 0.5 * dt * u1))
    K2 = G2 @ (J + 0.5 * dt * K1)
    u3, G3 = _split_fields(src.evaluate(t0 + 0.5 * dt, X + 0.5 * dt * u2))
    K3 = G3 @ (J + 0.5 * dt * K2)
    u4, G4 = _split_fields(src.evaluate(t1, X + dt * u3))
    K4 = G4 @ (J + dt * K3)
    Xn = X + dt / 6.0 * (u1 + 2 * u2 + 2 * u3 + u4)
    Jn = J + dt / 6.0 * (K1 + 2 * K2 + 2 * K3 + K4)
    ue, Ge = _split_fields(src.evaluate(t1, Xn))
    In = ensemble.lambda_integral + 0.5 * dt * (G1[:, 1, 1] + Ge[:, 1, 1])
    Rn = None
    if ensemble.remainder_integral is not None:
        f0 = _remainder_integrand(G1, J, ensemble.lambda_integral)
        f1 = _remainder_integrand(Ge, Jn, In)
        Rn = ensemble.remainder_integral + 0.5 * dt * (f0 + f1)
    return replace(
        ensemble,
        positions=Xn,
        jacobians=Jn,
        lambda_integral=In,
        t=t1,
        remainder_integral=Rn,
        max_jacobian=max(ensemble.max_jacobian, float(max_entry(Jn).max()) if len(Jn) else 0.0),
        boundary_contaminated=ensemble.boundary_contaminated or _outside(ensemble, Xn),
        _state=(t1, ue, Ge),
    )


def run_flow(ensemble: FlowEnsemble, traj, T: float | None = None, nsteps: int | None = None,
             keep: str = "all") -> list[FlowEnsemble]:
    """Advance to ``T`` in uniform steps; returns the ensembles at every step.

    For a solver trajectory the default steps land on its snapshot times, so
    only the RK4 half-steps use interpolated fields.  ``keep="last"`` returns
    just the initial and final ensembles.
    """
    src = as_source(traj)
    if isinstance(src, TrajectoryVelocity):
        ts = src.times
        T = float(ts[-1]) if T is None else T
        if nsteps is None:
            nsteps = int(np.searchsorted(ts, T - 1e-12 * max(1.0, T))) if T > ts[0] else 0
            nsteps = max(nsteps, 1) if T > ensemble.t else 0
    if T is None or nsteps is None:
        raise ValueError("frozen velocity sources need both T and nsteps")
    out = [ensemble]
    if nsteps == 0:
        return out
    dt = (T - ensemble.t) / nsteps
    ens = ensemble
    for i in range(nsteps):
        ens = advance(ens, src, dt)
        if i == nsteps - 1:
            ens = replace(ens, t=T)
            ens._state = (T,) + ens._state[1:] if ens._state else None
        if keep == "all" or i == nsteps - 1:
            out.append(ens)
    return out


# ---------------------------------------------------------------------------
# Duhamel decomposition


@dataclass(frozen=True)
class DuhamelSplit:
    t: float
    A: np.ndarray
    B: np.ndarray
    B_hat: np.ndarray
    residual: np.ndarray

    @property
    def det_A_defect(self) -> float:
        d = self.A[:, 0, 0] * self.A[:, 1, 1] - 1.0
        return float(np.abs(d).max()) if d.size else 0.0

    @property
    def max_residual(self) -> float:
        return float(self.residual.max()) if self.residual.size else 0.0


def duhamel_split(ensemble: FlowEnsemble) -> DuhamelSplit:
    """A = diag(e^{-∫Λ}, e^{∫Λ}), B = Dη - A and the quadratured B̂."""
    if not ensemble.has_history:
        raise HistoryError("remainder integral not accumulated from t = 0")
    I = ensemble.lambda_integral
    m = len(I)
    A = np.zeros((m, 2, 2))
    A[:, 0, 0] = np.exp(-I)
    A[:, 1, 1] = np.exp(I)
    B = ensemble.jacobians - A
    Bh = ensemble.remainder_integral.copy()
    Bh[:, 0, :] *= np.exp(-I)[:, None]
    Bh[:, 1, :] *= np.exp(I)[:, None]
    res = max_entry(A + Bh - ensemble.jacobians)
    return DuhamelSplit(ensemble.t, A, B, Bh, res)


@dataclass(frozen=True)
class RayResult:
    x: tuple[float, float]
    A_tilde: np.ndarray
    B_tilde: np.ndarray
    B_hat_tilde: np.ndarray
    displacement: np.ndarray
    residual: float
    residual_hat: float


def ray_reconstruct(ensemble: FlowEnsemble, x) -> RayResult:
    """Ã = ∫₀¹A(t, rx)dr·x and B̃ = ∫₀¹B(t, rx)dr·x against η(t, x) - η(t, 0)."""
    key = (float(x[0]), float(x[1]))
    if key not in ensemble.rays:
        raise KeyError(f"no ray layout registered for x = {key}")
    lay = ensemble.rays[key]
    idx = np.concatenate([lay["nodes"], [lay["end"], lay["origin"]]])
    if _outside(ensemble, ensemble.positions[idx]):
        raise BoundaryError(f"ray through {key} left the safe box")
    sp = duhamel_split(ensemble)
    w = lay["weights"]
    xv = np.asarray(key)
    nodes = lay["nodes"]
    At = np.einsum("j,jab,b->a", w, sp.A[nodes], xv)
    Bt = np.einsum("j,jab,b->a", w, sp.B[nodes], xv)
    Bht = np.einsum("j,jab,b->a", w, sp.B_hat[nodes], xv)
    disp = ensemble.positions[lay["end"]] - ensemble.positions[lay["origin"]]
    return RayResult(key, At, Bt, Bht, disp,
                     float(np.hypot(*(At + Bt - disp))), float(np.hypot(*(At + Bht - disp))))


# ---------------------------------------------------------------------------
# flow-level checks


def inverse_pullback(traj: Trajectory, ensemble: FlowEnsemble, name: str | None = None) -> float:
    """max |ω(t, η(t,x)) - ω₀(x)| / sup|ω₀| over the seeds (or one group)."""
    idx = slice(None) if name is None else ensemble.group(name)
    w0 = traj.snapshots[0]
    wt = traj.at(ensemble.t)
    a = sample_modes(centred_modes(wt.values), wt.grid, ensemble.positions[idx])
    b = sample_modes(centred_modes(w0.values), w0.grid, ensemble.seeds[idx])
    scale = sup_norm(w0)
    return float(np.abs(a - b).max() / scale) if scale else float(np.abs(a - b).max())


@dataclass(frozen=True)
class SignReport:
    fraction: float
    count: int
    worst: float


def sign_preservation_check(ensemble: FlowEnsemble, tol: float = 1e-8) -> SignReport:
    """Fraction of first-quadrant seeds whose images keep η₁, η₂ ≥ -tol."""
    q = (ensemble.seeds[:, 0] >= 0) & (ensemble.seeds[:, 1] >= 0)
    if not q.any():
        return SignReport(1.0, 0, 0.0)
    pos = ensemble.positions[q]
    ok = np.all(pos >= -tol, axis=1)
    return SignReport(float(ok.mean()), int(q.sum()), float(pos.min()))


def fd_jacobian_check(ensemble: FlowEnsemble, base: str, stencil: str, spacing: float) -> float:
    """Relative gap between ODE Jacobians and central differences of positions."""
    b, s = ensemble.group(base), ensemble.group(stencil)
    m = len(b)
    if len(s) != 4 * m:
        raise ValueError("stencil group must hold four partners per base seed")
    P = ensemble.positions[s].reshape(4, m, 2)
    fd = np.empty((m, 2, 2))
    fd[:, :, 0] = (P[0] - P[1]) / (2 * spacing)
    fd[:, :, 1] = (P[2] - P[3]) / (2 * spacing)
    J = ensemble.jacobians[b]
    return float(max_entry(J - fd).max() / max_entry(J).max())


def advected_jacobian(traj: Trajectory, ensemble: FlowEnsemble, name: str | None = None) -> np.ndarray:
    """Dη at the seeds from the advected back-to-label map X = η⁻¹.

    Dη(x) = cof(DX)(η(x)) for area-preserving maps, with DX = I + ∇(X - id)
    sampled at the particle positions.
    """
    D1, D2 = traj.inverse_map(ensemble.t)
    grid = D1.grid
    _, ko = centred_wavenumbers(grid)
    c = centred_modes(np.stack([D1.values, D2.values]))
    d1, d2 = 1j * ko[:, None], 1j * ko[None, :]
    modes = np.stack([d1 * c[0], d2 * c[0], d1 * c[1], d2 * c[1]])
    idx = slice(None) if name is None else ensemble.group(name)
    g = sample_modes(modes, grid, ensemble.positions[idx])
    X11, X12, X21, X22 = 1 + g[0], g[1], g[2], 1 + g[3]
    out = np.empty((g.shape[1], 2, 2))
    out[:, 0, 0], out[:, 0, 1] = X22, -X12
    out[:, 1, 0], out[:, 1, 1] = -X21, X11
    return out


# ---------------------------------------------------------------------------
# flow comparison


@dataclass(frozen=True)
class ComparisonResult:
    eps: tuple[float, ...]
    lhs: tuple[float, ...]
    lhs_position: tuple[float, ...]
    lhs_jacobian: tuple[float, ...]
    rhs: tuple[float, ...]

    @property
    def ratio(self) -> tuple[float, ...]:
        return tuple(a / b if b else math.nan for a, b in zip(self.lhs, self.rhs))

    @staticmethod
    def _slope(eps, vals) -> float:
        return float(np.polyfit(np.log(eps), np.log(vals), 1)[0])

    @property
    def slope(self) -> float:
        return self._slope(self.eps, self.lhs)

    @property
    def slope_jacobian(self) -> float:
        return self._slope(self.eps, self.lhs_jacobian)


def comparison_experiment(u, v: VectorField, T: float, eps=(1e-2, 5e-3, 2.5e-3),
                          seeds: np.ndarray | None = None, nsteps: int = 100) -> ComparisonResult:
    """Flows of u and u + εv from identical seeds; lhs and rhs of the comparison bound.

    lhs = sup_t (max|ξ - η| + max‖Dξ - Dη‖), rhs = sup_t(‖εv‖_∞ + ‖εDv‖_∞) for the
    frozen field v, both over the seed set.
    """
    base = as_source(u)
    if seeds is None:
        seeds = lattice_seeds(16, 0.25 * base.grid.L)
    vsrc = FrozenVelocity(v)
    vm = vsrc.modes(0.0)
    grid = v.grid

    def _sup(c):
        vals = np.real(np.fft.ifft2(np.fft.ifftshift(_fold_centred(c)))) * grid.n**2
        return float(np.abs(vals).max())

    v_sup = max(_sup(vm[0]), _sup(vm[1]))
    dv_sup = max(_sup(vm[i]) for i in range(2, 6))
    ref = run_flow(FlowEnsemble.from_groups({"seeds": seeds}), base, T, nsteps)
    lhs, lp, lj, rhs = [], [], [], []
    for e in eps:
        pert = SumVelocity(base, _Scaled(vsrc, e))
        run = run_flow(FlowEnsemble.from_groups({"seeds": seeds}), pert, T, nsteps)
        dp = max(float(np.abs(a.positions - b.positions).max()) for a, b in zip(run, ref))
        dj = max(float(max_entry(a.jacobians - b.jacobians).max()) for a, b in zip(run, ref))
        tot = max(float(np.abs(a.positions - b.positions).max()
                        + max_entry(a.jacobians - b.jacobians).max()) for a, b in zip(run, ref))
        lhs.append(tot)
        lp.append(dp)
        lj.append(dj)
        rhs.append(e * (v_sup + dv_sup))
    return ComparisonResult(tuple(eps), tuple(lhs), tuple(lp), tuple(lj), tuple(rhs))


def _fold_centred(c: np.ndarray) -> np.ndarray:
    """Centred (n+1)² modes back to the n² fftshifted layout (Nyquist halves merged)."""
    n = c.shape[-1] - 1
    out = c[..., :n, :n].copy()
    out[..., 0, :] += c[..., n, :n]
    out[..., :, 0] += c[..., :n, n]
    out[..., 0, 0] += c[..., n, n]
    return out


class _Scaled(VelocitySource):
    def __init__(self, src: VelocitySource, c: float):
        self.grid, self.src, self.c = src.grid, src, c

    def modes(self, t):
        return self.c * self.src.modes(t)

    def covers(self, t0, t1):
        return self.src.covers(t0, t1)
