"""Quadrature rules used as independent oracles.

``adaptive_cubature`` is a tolerance-driven dyadic refinement over squares with a
tensor Gauss-Legendre rule; ``disk_rule`` is a polar Gauss rule for one bump.
"""

from __future__ import annotations

import functools

import numpy as np

__all__ = ["adaptive_cubature", "disk_rule", "gauss_legendre_unit"]


@functools.lru_cache(maxsize=8)
def gauss_legendre_unit(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the m-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _square_rule(f, x0, y0, size, m):
    x, w = gauss_legendre_unit(m)
    X, Y = np.meshgrid(x0 + size * x, y0 + size * x, indexing="ij")
    W = np.outer(w, w) * size * size
    return float(np.sum(W * f(X, Y)))


def adaptive_cubature(f, box, tol: float = 1e-12, order: int = 8, max_depth: int = 14,
                      min_depth: int = 2) -> tuple[float, int]:
    """Integrate ``f(x1, x2)`` (vectorised) over the square ``box = (x0, y0, size)``.

    A cell is accepted when its estimate agrees with the sum over its four
    children to within ``tol`` scaled by the cell's share of the area.
    Returns (integral, number of accepted cells).
    """
    x0, y0, size = box
    total = 0.0
    cells = 0
    stack = [(x0, y0, size, _square_rule(f, x0, y0, size, order), 0)]
    area = size * size
    while stack:
        cx, cy, s, est, depth = stack.pop()
        half = 0.5 * s
        kids = [(cx + a * half, cy + b * half) for a in (0, 1) for b in (0, 1)]
        vals = [_square_rule(f, kx, ky, half, order) for kx, ky in kids]
        fine = sum(vals)
        if depth >= min_depth and (abs(fine - est) <= tol * (s * s) / area or depth >= max_depth):
            total += fine
            cells += 1
            continue
        for (kx, ky), v in zip(kids, vals):
            stack.append((kx, ky, half, v, depth + 1))
    return total, cells


def disk_rule(centre, radius, n_radial: int = 24, n_angular: int = 48):
    """Polar product rule on a disk: Gauss-Legendre in r, trapezoid in angle.

    Exact for smooth functions that vanish with all derivatives at the rim to
    spectral accuracy.  Returns (points (m, 2), weights (m,)).
    """
    r, wr = gauss_legendre_unit(n_radial)
    th = 2.0 * np.pi * (np.arange(n_angular) + 0.5) / n_angular
    R, TH = np.meshgrid(radius * r, th, indexing="ij")
    W = (radius * wr)[:, None] * R * (2.0 * np.pi / n_angular)
    pts = np.stack([centre[0] + R * np.cos(TH), centre[1] + R * np.sin(TH)], axis=-1)
    return pts.reshape(-1, 2), W.reshape(-1)
