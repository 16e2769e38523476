"""Periodic-box fields and the spectral operators acting on them.

Grid convention: the box is ``[-L/2, L/2)^2`` sampled at cell centres
``x_i = -L/2 + (i + 1/2) h``.  Array axis 0 is ``x1`` and axis 1 is ``x2``
(``indexing="ij"``).  The cell-centred grid is symmetric about the origin, so
the reflections ``x1 -> -x1`` and ``x2 -> -x2`` are exact array flips.

Odd-order derivative multipliers vanish on the Nyquist lines so that every
derived field stays real; the identities ``rot(biot_savart(w)) = w`` and
``div(grad(poisson_inverse(w))) = w`` are therefore exact for fields without
Nyquist content.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

try:  # exact off-grid evaluation of the trigonometric interpolant
    import finufft
except ImportError:  # pragma: no cover - declared dependency
    finufft = None

__all__ = [
    "GridSpec",
    "ScalarField",
    "VectorField",
    "ZeroModeError",
    "poisson_inverse",
    "biot_savart",
    "riesz",
    "gradient",
    "divergence",
    "rot",
    "lp_norm",
    "sup_norm",
    "sobolev_norm",
    "gradient_lp_norm",
    "sample",
    "sample_many",
    "parity_defect",
    "Spectrum",
    "centred_modes",
    "centred_wavenumbers",
    "sample_modes",
]

MEAN_ZERO_RTOL = 1e-12
OVERSAMPLE = 4
DIRECT_POINTS = 16


class ZeroModeError(ValueError):
    """Raised when Δ⁻¹ is applied to a field with a nonzero mean."""


@dataclass(frozen=True)
class GridSpec:
    side_length: float = 8.0
    points_per_side: int = 1024

    def __post_init__(self):
        n = self.points_per_side
        if not isinstance(n, (int, np.integer)) or n < 16 or n & (n - 1):
            raise ValueError(f"points_per_side must be a power of two >= 16, got {n!r}")
        if not self.side_length > 0 or not np.isfinite(self.side_length):
            raise ValueError(f"side_length must be positive, got {self.side_length!r}")
        object.__setattr__(self, "points_per_side", int(n))
        object.__setattr__(self, "side_length", float(self.side_length))

    @property
    def n(self) -> int:
        return self.points_per_side

    @property
    def L(self) -> float:
        return self.side_length

    @property
    def h(self) -> float:
        return self.side_length / self.points_per_side

    @property
    def origin(self) -> float:
        """Coordinate of the first cell centre."""
        return -0.5 * self.side_length + 0.5 * self.h

    def coords(self) -> np.ndarray:
        return _coords(self.side_length, self.points_per_side)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.coords()
        return np.meshgrid(x, x, indexing="ij")

    def cell_area(self) -> float:
        return self.h * self.h

    def fold(self, points) -> np.ndarray:
        """Map points into ``[-L/2, L/2)^2`` by periodicity."""
        pts = np.asarray(points, dtype=float)
        return (pts + 0.5 * self.L) % self.L - 0.5 * self.L

    def halved(self) -> "GridSpec":
        return GridSpec(self.side_length, self.points_per_side // 2)


@functools.lru_cache(maxsize=16)
def _coords(L: float, n: int) -> np.ndarray:
    h = L / n
    x = -0.5 * L + (np.arange(n) + 0.5) * h
    x.setflags(write=False)
    return x


@functools.lru_cache(maxsize=16)
def _wavenumbers(L: float, n: int):
    """Wavenumbers in rfft2 layout: (k1 even, k2 even, k1 odd, k2 odd, |k|^2 safe)."""
    k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=L / n)
    k2 = 2.0 * np.pi * np.fft.rfftfreq(n, d=L / n)
    k1_odd = k1.copy()
    k1_odd[n // 2] = 0.0
    k2_odd = k2.copy()
    k2_odd[n // 2] = 0.0
    K1 = k1[:, None] * np.ones_like(k2)[None, :]
    K2 = np.ones_like(k1)[:, None] * k2[None, :]
    K1o = k1_odd[:, None] * np.ones_like(k2)[None, :]
    K2o = np.ones_like(k1)[:, None] * k2_odd[None, :]
    ksq = K1**2 + K2**2
    ksq_safe = ksq.copy()
    ksq_safe[0, 0] = 1.0
    out = (K1, K2, K1o, K2o, ksq, ksq_safe)
    for a in out:
        a.setflags(write=False)
    return out


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray
    is_mean_zero: bool = False

    def __post_init__(self):
        v = _readonly(self.values)
        n = self.grid.n
        if v.shape != (n, n):
            raise ValueError(f"values must have shape {(n, n)}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if self.is_mean_zero:
            peak = np.max(np.abs(v))
            if abs(v.mean()) > MEAN_ZERO_RTOL * peak:
                raise ValueError(
                    f"field flagged mean-zero has mean {v.mean():.3e} (sup {peak:.3e})"
                )
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ScalarField":
        return cls(grid, np.zeros((grid.n, grid.n)), is_mean_zero=True)

    @classmethod
    def from_function(cls, grid: GridSpec, fn, is_mean_zero: bool = False) -> "ScalarField":
        X1, X2 = grid.mesh()
        return cls(grid, np.broadcast_to(fn(X1, X2), X1.shape), is_mean_zero=is_mean_zero)

    def with_values(self, values, is_mean_zero: bool | None = None) -> "ScalarField":
        flag = self.is_mean_zero if is_mean_zero is None else is_mean_zero
        return ScalarField(self.grid, values, is_mean_zero=flag)

    def mean(self) -> float:
        return float(self.values.mean())

    def _check(self, other: "ScalarField"):
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def _combined(self, values, other) -> "ScalarField":
        # operands were validated; cancellation leaves only rounding in the mean
        out = ScalarField(self.grid, values)
        if self.is_mean_zero and other.is_mean_zero:
            object.__setattr__(out, "is_mean_zero", True)
        return out

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return self._combined(self.values + other.values, other)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return self._combined(self.values - other.values, other)
        return NotImplemented

    def __mul__(self, c):
        if np.isscalar(c):
            return ScalarField(self.grid, self.values * c, is_mean_zero=self.is_mean_zero)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: GridSpec
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        a, b = _readonly(self.u1), _readonly(self.u2)
        for c in (a, b):
            if c.shape != (n, n):
                raise ValueError(f"components must have shape {(n, n)}, got {c.shape}")
            if not np.all(np.isfinite(c)):
                raise ValueError("vector field values must be finite")
        object.__setattr__(self, "u1", a)
        object.__setattr__(self, "u2", b)

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, (self.u1, self.u2)[i - 1])

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u1, self.u2)

    def __add__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        return VectorField(self.grid, self.u1 + other.u1, self.u2 + other.u2)

    def __mul__(self, c):
        if np.isscalar(c):
            return VectorField(self.grid, self.u1 * c, self.u2 * c)
        return NotImplemented

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# spectral operators


@dataclass(frozen=True, eq=False)
class Spectrum:
    """rfft2 coefficients of a real grid field, with cached wavenumbers."""

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    @classmethod
    def of(cls, f: ScalarField | np.ndarray, grid: GridSpec | None = None) -> "Spectrum":
        if isinstance(f, ScalarField):
            return cls(f.grid, np.fft.rfft2(f.values))
        return cls(grid, np.fft.rfft2(f))

    @property
    def k(self):
        return _wavenumbers(self.grid.L, self.grid.n)

    def to_grid(self, coeffs: np.ndarray | None = None) -> np.ndarray:
        c = self.coeffs if coeffs is None else coeffs
        return np.fft.irfft2(c, s=(self.grid.n, self.grid.n))

    def deriv(self, axis: int) -> np.ndarray:
        _, _, K1o, K2o, _, _ = self.k
        return 1j * (K1o if axis == 1 else K2o) * self.coeffs

    def inv_laplacian(self) -> np.ndarray:
        *_, ksq_safe = self.k
        out = -self.coeffs / ksq_safe
        out[0, 0] = 0.0
        return out

    def riesz(self, i: int, j: int) -> np.ndarray:
        K1, K2, K1o, K2o, _, ksq_safe = self.k
        if i == j:
            num = (K1 if i == 1 else K2) ** 2
        else:
            num = K1o * K2o
        out = num / ksq_safe * self.coeffs
        out[0, 0] = 0.0
        return out


def _require_mean_zero(w: ScalarField):
    if not w.is_mean_zero:
        raise ZeroModeError("zero-mode undefined: Δ⁻¹ needs a mean-zero field")


def poisson_inverse(w: ScalarField) -> ScalarField:
    """Stream function ψ with Δψ = w and zero mean."""
    _require_mean_zero(w)
    s = Spectrum.of(w)
    return ScalarField(w.grid, s.to_grid(s.inv_laplacian()), is_mean_zero=True)


def biot_savart(w: ScalarField) -> VectorField:
    """Velocity u = ∇⊥Δ⁻¹w = (-∂₂ψ, ∂₁ψ)."""
    _require_mean_zero(w)
    s = Spectrum.of(w)
    psi = Spectrum(w.grid, s.inv_laplacian())
    return VectorField(w.grid, -s.to_grid(psi.deriv(2)), s.to_grid(psi.deriv(1)))


def riesz(w: ScalarField, i: int, j: int) -> ScalarField:
    """Double Riesz transform R_ij w = ∂_i∂_jΔ⁻¹w (multiplier ξ_iξ_j/|ξ|²)."""
    if i not in (1, 2) or j not in (1, 2):
        raise ValueError(f"axes must be 1 or 2, got ({i}, {j})")
    _require_mean_zero(w)
    s = Spectrum.of(w)
    return ScalarField(w.grid, s.to_grid(s.riesz(i, j)), is_mean_zero=True)


def gradient(f: ScalarField) -> VectorField:
    s = Spectrum.of(f)
    return VectorField(f.grid, s.to_grid(s.deriv(1)), s.to_grid(s.deriv(2)))


def divergence(u: VectorField) -> ScalarField:
    a = Spectrum.of(u.u1, u.grid)
    b = Spectrum.of(u.u2, u.grid)
    return ScalarField(u.grid, a.to_grid(a.deriv(1) + b.deriv(2)))


def rot(u: VectorField) -> ScalarField:
    """Scalar vorticity -∂₂u₁ + ∂₁u₂."""
    a = Spectrum.of(u.u1, u.grid)
    b = Spectrum.of(u.u2, u.grid)
    return ScalarField(u.grid, a.to_grid(-a.deriv(2) + b.deriv(1)))


# ---------------------------------------------------------------------------
# norms


def _check_p(p: float):
    if not p > 1 or not np.isfinite(p):
        raise ValueError(f"exponent p must satisfy 1 < p < inf, got {p!r}")


def _as_array(f) -> tuple[np.ndarray, GridSpec]:
    if isinstance(f, ScalarField):
        return f.values, f.grid
    raise TypeError(f"expected ScalarField, got {type(f).__name__}")


def lp_norm(f: ScalarField, p: float) -> float:
    _check_p(p)
    v, g = _as_array(f)
    return float((g.cell_area() * np.sum(np.abs(v) ** p)) ** (1.0 / p))


def _shifted_max(coeffs: np.ndarray, grid: GridSpec, factor: int) -> float:
    K1, K2, *_ = _wavenumbers(grid.L, grid.n)
    n = grid.n
    h = grid.h
    best = 0.0
    for a in range(factor):
        s1 = a * h / factor
        ph1 = np.exp(1j * K1[:, :1] * s1)
        ph1[n // 2] = np.cos(K1[n // 2, 0] * s1)
        for b in range(factor):
            s2 = b * h / factor
            ph2 = np.exp(1j * K2[:1, :] * s2)
            ph2[0, n // 2] = np.cos(K2[0, n // 2] * s2)
            vals = np.fft.irfft2(coeffs * ph1 * ph2, s=(n, n))
            best = max(best, float(np.max(np.abs(vals))))
    return best


def sup_norm(f: ScalarField, oversample: int = OVERSAMPLE) -> float:
    """Max of |f| over an ``oversample``-times refined grid (trigonometric interpolant)."""
    v, g = _as_array(f)
    if oversample <= 1:
        return float(np.max(np.abs(v)))
    return _shifted_max(np.fft.rfft2(v), g, oversample)


def gradient_lp_norm(f: ScalarField, p: float) -> float:
    """‖∇f‖_{L^p} with the Euclidean length of the gradient."""
    _check_p(p)
    g = gradient(f)
    mag = np.hypot(g.u1, g.u2)
    return float((f.grid.cell_area() * np.sum(mag**p)) ** (1.0 / p))


def sobolev_norm(f: ScalarField, p: float) -> float:
    """W^{1,p} norm ‖f‖_{L^p} + ‖∇f‖_{L^p}."""
    return lp_norm(f, p) + gradient_lp_norm(f, p)


# ---------------------------------------------------------------------------
# off-grid sampling


def centred_modes(values: np.ndarray) -> np.ndarray:
    """Fourier coefficients on the symmetric index set -n/2..n/2 (shape (n+1, n+1)).

    The Nyquist coefficients are split evenly between +n/2 and -n/2, which makes
    the evaluated series the real trigonometric interpolant of ``values``
    (last axes are the spatial ones; leading axes are carried along).
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[-1]
    c = np.fft.fftshift(np.fft.fft2(v), axes=(-2, -1)) / (n * n)
    out = np.zeros(v.shape[:-2] + (n + 1, n + 1), dtype=complex)
    out[..., :n, :n] = c
    # index 0 holds frequency -n/2; mirror it to +n/2 with half weight on each side
    out[..., n, :] = out[..., 0, :]
    out[..., 0, :] *= 0.5
    out[..., n, :] *= 0.5
    out[..., :, n] = out[..., :, 0]
    out[..., :, 0] *= 0.5
    out[..., :, n] *= 0.5
    return out


@functools.lru_cache(maxsize=8)
def _centred_wavenumbers(L: float, n: int):
    k = 2.0 * np.pi / L * np.arange(-(n // 2), n // 2 + 1, dtype=float)
    k_odd = k.copy()
    k_odd[[0, -1]] = 0.0
    k.setflags(write=False)
    k_odd.setflags(write=False)
    return k, k_odd


def centred_wavenumbers(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """1-D wavenumbers matching ``centred_modes``: (even, odd with Nyquist zeroed)."""
    return _centred_wavenumbers(grid.L, grid.n)


def _to_unit_phase(points: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    theta = 2.0 * np.pi * (pts - grid.origin) / grid.L
    theta = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return np.ascontiguousarray(theta[:, 0]), np.ascontiguousarray(theta[:, 1])


def sample_modes(modes: np.ndarray, grid: GridSpec, points, eps: float = 1e-14,
                 method: str = "auto") -> np.ndarray:
    """Evaluate centred-mode series at points; ``modes`` has shape (..., n+1, n+1).

    ``method`` is ``nufft``, ``direct`` (separable sum) or ``auto``, which picks
    the direct sum for at most ``DIRECT_POINTS`` points.
    """
    if method not in ("auto", "nufft", "direct"):
        raise ValueError(f"unknown evaluation method {method!r}")
    if finufft is None:  # pragma: no cover
        raise RuntimeError("finufft is required for Fourier sampling")
    x, y = _to_unit_phase(points, grid)
    lead = modes.shape[:-2]
    m = np.ascontiguousarray(modes.reshape((-1,) + modes.shape[-2:]))
    if x.size == 0:
        return np.zeros(lead + (0,))
    if method == "direct" or (method == "auto" and x.size <= DIRECT_POINTS):
        return _sample_direct(m, x, y).reshape(lead + (x.size,))
    vals = finufft.nufft2d2(x, y, m if m.shape[0] > 1 else m[0], eps=eps, isign=1, nthreads=1)
    return np.real(vals).reshape(lead + (x.size,))


def _sample_direct(m: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # separable sum; cheaper than a non-uniform transform for a handful of points
    half = (m.shape[-1] - 1) // 2
    j = np.arange(-half, half + 1)
    e1 = np.exp(1j * np.outer(x, j))
    e2 = np.exp(1j * np.outer(y, j))
    out = np.empty((m.shape[0], x.size))
    for a in range(m.shape[0]):
        out[a] = np.real(np.einsum("pi,ij,pj->p", e1, m[a], e2))
    return out


def sample(f: ScalarField, points, method: str = "fourier") -> np.ndarray:
    """Interpolated values of ``f`` at ``points`` (array of shape (m, 2)).

    ``fourier`` evaluates the trigonometric interpolant exactly (the reference
    path); ``bicubic`` is a periodic cubic-spline fast path.
    """
    return sample_many([f], points, method=method)[0]


def sample_many(fields: Sequence[ScalarField], points, method: str = "fourier") -> np.ndarray:
    if not fields:
        return np.zeros((0, len(np.asarray(points).reshape(-1, 2))))
    grid = fields[0].grid
    for f in fields:
        if f.grid != grid:
            raise ValueError("all sampled fields must share one grid")
    pts = grid.fold(np.asarray(points, dtype=float).reshape(-1, 2))
    stack = np.stack([f.values for f in fields])
    if method == "fourier":
        return sample_modes(centred_modes(stack), grid, pts)
    if method in ("bicubic", "spline"):
        from scipy import ndimage

        order = 3 if method == "bicubic" else 5
        idx = ((pts - grid.origin) / grid.h).T
        return np.stack(
            [ndimage.map_coordinates(s, idx, order=order, mode="grid-wrap") for s in stack]
        )
    raise ValueError(f"unknown sampling method {method!r}")


# ---------------------------------------------------------------------------
# symmetry


def parity_defect(f: ScalarField) -> tuple[float, float, float, float]:
    """(odd₁, odd₂, even₁, even₂) defects, each sup|f ± f∘reflection| / sup|f|."""
    v = f.values
    peak = float(np.max(np.abs(v)))
    if peak == 0.0:
        return (0.0, 0.0, 0.0, 0.0)
    r1 = v[::-1, :]
    r2 = v[:, ::-1]
    return (
        float(np.max(np.abs(v + r1))) / peak,
        float(np.max(np.abs(v + r2))) / peak,
        float(np.max(np.abs(v - r1))) / peak,
        float(np.max(np.abs(v - r2))) / peak,
    )
