"""Initial vorticity families: the dyadic odd-odd bumps and their perturbations."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .fields import GridSpec, ScalarField

__all__ = [
    "ConstructionParams",
    "UnresolvableError",
    "SupportOverlapError",
    "MollifierBump",
    "PlateauBump",
    "PHI",
    "RHO",
    "quadrupole",
    "omega0",
    "omega0_field",
    "omega0_components",
    "omega0_analytic",
    "omega0_analytic_gradient",
    "beta",
    "beta_analytic",
    "beta_analytic_gradient",
    "omega0n",
    "bump_centres",
]


class UnresolvableError(ValueError):
    pass


class SupportOverlapError(ValueError):
    pass


# ---------------------------------------------------------------------------
# profiles


def _mollifier(s):
    """exp(1 - 1/(1 - s^2)) on |s| < 1, zero elsewhere (peak 1 at s = 0)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


def _mollifier_deriv(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1.0
    q = 1.0 - s[m] ** 2
    out[m] = np.exp(1.0 - 1.0 / q) * (-2.0 * s[m] / q**2)
    return out


def _g(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = s > 0
    out[m] = np.exp(-1.0 / s[m])
    return out


def _g_deriv(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = s > 0
    out[m] = np.exp(-1.0 / s[m]) / s[m] ** 2
    return out


@dataclass(frozen=True)
class MollifierBump:
    """Radial C∞ bump φ(x) = m(|x|/radius) with m the standard mollifier.

    0 ≤ φ ≤ 1, φ(0) = 1 and supp φ = closed ball of ``radius``.  The default
    radius 1/4 makes the dyadic copies φ_k sit inside B((±2^-k, ±2^-k), 2^-(k+2)).
    """

    radius: float = 0.25

    @property
    def support_radius(self) -> float:
        return self.radius

    def radial(self, r):
        return _mollifier(np.asarray(r) / self.radius)

    def radial_deriv(self, r):
        return _mollifier_deriv(np.asarray(r) / self.radius) / self.radius

    def __call__(self, x1, x2):
        return self.radial(np.hypot(x1, x2))

    def grad(self, x1, x2):
        r = np.hypot(x1, x2)
        d = self.radial_deriv(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            g1 = np.where(r > 0, d * x1 / np.where(r > 0, r, 1.0), 0.0)
            g2 = np.where(r > 0, d * x2 / np.where(r > 0, r, 1.0), 0.0)
        return g1, g2


@dataclass(frozen=True)
class PlateauBump:
    """Radial C∞ cutoff: 1 on B(0, inner), 0 outside B(0, outer), monotone between."""

    inner: float = 1.0
    outer: float = 2.0

    @property
    def support_radius(self) -> float:
        return self.outer

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        a = _g(self.outer - r)
        b = _g(r - self.inner)
        return a / (a + b)

    def radial_deriv(self, r):
        r = np.asarray(r, dtype=float)
        a, b = _g(self.outer - r), _g(r - self.inner)
        da, db = -_g_deriv(self.outer - r), _g_deriv(r - self.inner)
        return (da * b - a * db) / (a + b) ** 2

    def __call__(self, x1, x2):
        return self.radial(np.hypot(x1, x2))

    def grad(self, x1, x2):
        r = np.hypot(x1, x2)
        d = self.radial_deriv(r)
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > 0, d * x1 / safe, 0.0), np.where(r > 0, d * x2 / safe, 0.0)


PHI = MollifierBump()
RHO = PlateauBump()

SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class ConstructionParams:
    M: float = 3.0
    N: int = 3
    N0: int = 1
    p: float = 2.5
    n_pert: int = 1
    x_star: tuple[float, float] = (1.0, 1.0)
    delta: float = 0.1
    T_horizon: float | None = None

    def __post_init__(self):
        if not self.M >= 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if int(self.N0) != self.N0 or self.N0 < 1:
            raise ValueError(f"N0 must be a positive integer, got {self.N0}")
        if not (2.0 < self.p <= 3.0):
            raise ValueError(f"p must lie in (2, 3], got {self.p}")
        if int(self.n_pert) != self.n_pert or self.n_pert < 1:
            raise ValueError(f"n_pert must be a positive integer, got {self.n_pert}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        object.__setattr__(self, "x_star", tuple(float(c) for c in self.x_star))
        if len(self.x_star) != 2:
            raise ValueError("x_star must be a 2D point")
        window = min(1.0, self.M**-3)
        T = window if self.T_horizon is None else float(self.T_horizon)
        if not (0 < T <= window * (1 + 1e-12)):
            raise ValueError(f"T_horizon must lie in (0, min(1, M^-3)] = (0, {window}], got {T}")
        object.__setattr__(self, "T_horizon", T)

    @property
    def lam(self) -> int:
        return 3 * self.n_pert

    @property
    def k(self) -> int:
        return self.lam**2

    def scales(self) -> range:
        return range(self.N0, self.N0 + self.N + 1)

    def smallest_scale(self) -> float:
        return 2.0 ** -(self.N0 + self.N + 2)

    def with_(self, **kw) -> "ConstructionParams":
        if "M" in kw and "T_horizon" not in kw:
            kw["T_horizon"] = None
        return replace(self, **kw)

    def check_resolvable(self, grid: GridSpec):
        if self.smallest_scale() < 2 * grid.h * (1 - 1e-12):
            raise UnresolvableError(
                f"smallest scale 2^-{self.N0 + self.N + 2} = {self.smallest_scale():.5g} "
                f"is below 2h = {2 * grid.h:.5g}"
            )

    def perturbation_problem(self, grid: GridSpec, n_pert: int | None = None) -> str | None:
        """Reason the perturbation β_n cannot be built on ``grid`` (None if it can)."""
        n = self.n_pert if n_pert is None else n_pert
        lam, k = 3 * n, 9 * n * n
        if 2.0 / lam < 2 * grid.h:
            return f"2/lambda = {2 / lam:.4g} < 2h = {2 * grid.h:.4g}"
        if k > math.pi / (2 * grid.h):
            return f"carrier sin({k} x1) has fewer than 4 points per wavelength"
        x1, x2 = (abs(c) for c in self.x_star)
        if min(x1, x2) <= 2.0 / lam:
            return f"x* = {self.x_star} is within 2/lambda = {2 / lam:.4g} of an axis"
        if max(x1, x2) + 2.0 / lam > grid.L / 4:
            return f"support balls leave the safe region |x_i| <= L/4 = {grid.L / 4:.4g}"
        return None


# ---------------------------------------------------------------------------
# stamping helpers


def _window(grid: GridSpec, centre, radius):
    """Index slices covering the square of half-width ``radius`` around ``centre``."""
    x = grid.coords()
    sl = []
    for c in centre:
        lo = int(np.searchsorted(x, c - radius - grid.h))
        hi = int(np.searchsorted(x, c + radius + grid.h))
        sl.append(slice(max(lo, 0), min(hi, grid.n)))
    return tuple(sl)


def _stamp(out, grid: GridSpec, centre, radius, fn):
    s1, s2 = _window(grid, centre, radius)
    x = grid.coords()
    X1, X2 = np.meshgrid(x[s1] - centre[0], x[s2] - centre[1], indexing="ij")
    out[s1, s2] += fn(X1, X2)


def quadrupole(phi: MollifierBump, grid: GridSpec) -> ScalarField:
    """φ₀(x) = Σ ε₁ε₂ φ(x₁ - ε₁, x₂ - ε₂)."""
    out = np.zeros((grid.n, grid.n))
    for e1, e2 in SIGNS:
        _stamp(out, grid, (e1, e2), phi.support_radius, lambda a, b, s=e1 * e2: s * phi(a, b))
    return ScalarField(grid, out, is_mean_zero=True)


def bump_centres(params: ConstructionParams, phi: MollifierBump = PHI):
    """(scale k, ε₁, ε₂, centre, radius, amplitude) for each bump of ω₀."""
    pref = params.M**-2 * params.N ** (-1.0 / params.p)
    out = []
    for k in params.scales():
        amp = pref * 2.0 ** ((-1.0 + 2.0 / params.p) * k)
        for e1, e2 in SIGNS:
            c = (e1 * 2.0**-k, e2 * 2.0**-k)
            out.append((k, e1, e2, c, phi.support_radius * 2.0**-k, e1 * e2 * amp))
    return out


def omega0_field(grid: GridSpec, M: float, N: int, N0: int, p: float,
                 phi: MollifierBump = PHI, scales=None) -> ScalarField:
    """ω₀ = M⁻² N^{-1/p} Σ_{N0≤k≤N0+N} 2^{(-1+2/p)k} φ₀(2^k x); no parameter validation."""
    out = np.zeros((grid.n, grid.n))
    pref = M**-2 * N ** (-1.0 / p)
    ks = range(N0, N0 + N + 1) if scales is None else scales
    for k in ks:
        amp = pref * 2.0 ** ((-1.0 + 2.0 / p) * k)
        s = 2.0**k
        for e1, e2 in SIGNS:
            c = (e1 / s, e2 / s)
            _stamp(out, grid, c, phi.support_radius / s,
                   lambda a, b, w=e1 * e2 * amp: w * phi(s * a, s * b))
    return ScalarField(grid, out, is_mean_zero=True)


def omega0(params: ConstructionParams, grid: GridSpec, phi: MollifierBump = PHI) -> ScalarField:
    params.check_resolvable(grid)
    return omega0_field(grid, params.M, params.N, params.N0, params.p, phi)


def omega0_components(params: ConstructionParams, grid: GridSpec, phi: MollifierBump = PHI):
    """The per-scale pieces M⁻²N^{-1/p}φ_k, keyed by k."""
    params.check_resolvable(grid)
    return {
        k: omega0_field(grid, params.M, params.N, params.N0, params.p, phi, scales=[k])
        for k in params.scales()
    }


def omega0_analytic(params: ConstructionParams, x1, x2, phi: MollifierBump = PHI):
    """Closed-form ω₀ at arbitrary points."""
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    out = np.zeros(np.broadcast(x1, x2).shape)
    for k, e1, e2, c, r, w in bump_centres(params, phi):
        s = 2.0**k
        out = out + w * phi(s * (x1 - c[0]), s * (x2 - c[1]))
    return out


def omega0_analytic_gradient(params: ConstructionParams, x1, x2, phi: MollifierBump = PHI):
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    g1 = np.zeros(np.broadcast(x1, x2).shape)
    g2 = np.zeros_like(g1)
    for k, e1, e2, c, r, w in bump_centres(params, phi):
        s = 2.0**k
        a, b = phi.grad(s * (x1 - c[0]), s * (x2 - c[1]))
        g1 = g1 + w * s * a
        g2 = g2 + w * s * b
    return g1, g2


# ---------------------------------------------------------------------------
# perturbations


def _beta_setup(params: ConstructionParams, grid: GridSpec | None):
    lam, k = params.lam, params.k
    x1, x2 = (abs(c) for c in params.x_star)
    if min(x1, x2) <= 2.0 / lam:
        raise SupportOverlapError(
            f"support balls B(x*_eps, 2/lambda) overlap: x* = {params.x_star}, 2/lambda = {2 / lam:.4g}"
        )
    if grid is not None:
        why = params.perturbation_problem(grid)
        if why is not None:
            raise UnresolvableError(f"beta_{params.n_pert} not representable: {why}")
    amp = lam ** (-1.0 + 2.0 / params.p) / math.sqrt(k)
    centres = [((e1 * params.x_star[0], e2 * params.x_star[1]), e1 * e2) for e1, e2 in SIGNS]
    return lam, k, amp, centres


def beta(params: ConstructionParams, grid: GridSpec, rho: PlateauBump = RHO) -> ScalarField:
    """β_{k,λ}(x) = λ^{-1+2/p} k^{-1/2} Σ ε₁ε₂ ρ(λ(x - x*_ε)) sin(k x₁), k = λ², λ = 3n."""
    lam, k, amp, centres = _beta_setup(params, grid)
    out = np.zeros((grid.n, grid.n))
    R = rho.support_radius / lam
    x = grid.coords()
    for c, sgn in centres:
        s1, s2 = _window(grid, c, R)
        X1, X2 = np.meshgrid(x[s1], x[s2], indexing="ij")
        out[s1, s2] += sgn * rho(lam * (X1 - c[0]), lam * (X2 - c[1])) * np.sin(k * X1)
    return ScalarField(grid, amp * out, is_mean_zero=True)


def beta_analytic(params: ConstructionParams, x1, x2, rho: PlateauBump = RHO):
    lam, k, amp, centres = _beta_setup(params, None)
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    env = sum(sgn * rho(lam * (x1 - c[0]), lam * (x2 - c[1])) for c, sgn in centres)
    return amp * env * np.sin(k * x1)


def beta_analytic_gradient(params: ConstructionParams, x1, x2, rho: PlateauBump = RHO):
    lam, k, amp, centres = _beta_setup(params, None)
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    env = 0.0
    d1 = 0.0
    d2 = 0.0
    for c, sgn in centres:
        env = env + sgn * rho(lam * (x1 - c[0]), lam * (x2 - c[1]))
        a, b = rho.grad(lam * (x1 - c[0]), lam * (x2 - c[1]))
        d1 = d1 + sgn * lam * a
        d2 = d2 + sgn * lam * b
    s, co = np.sin(k * x1), np.cos(k * x1)
    return amp * (d1 * s + env * k * co), amp * d2 * s


def omega0n(w0: ScalarField, b: ScalarField) -> ScalarField:
    """Perturbed datum ω_{0,n} = ω₀ + β_n."""
    if w0.grid != b.grid:
        raise ValueError(f"grid mismatch: {w0.grid} vs {b.grid}")
    return ScalarField(w0.grid, w0.values + b.values, is_mean_zero=True)
