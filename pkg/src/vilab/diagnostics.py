"""Numerical checks of the construction's estimates, and the inflation experiment.

Each check returns a list of report rows.  Assertions carry a tolerance and
a verdict; monitored rows record a measurement that the theory only bounds
up to an unknown constant or asymptotically.  The matrix sup norm is the
largest absolute entry throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .fields import (
    GridSpec,
    ScalarField,
    VectorField,
    biot_savart,
    centred_modes,
    gradient,
    poisson_inverse,
    riesz,
    sample_modes,
    sobolev_norm,
    sup_norm,
)
from .initial_data import (
    PHI,
    RHO,
    ConstructionParams,
    beta,
    beta_analytic_gradient,
    bump_centres,
    omega0,
    omega0_analytic,
    omega0n,
)
from .lagrangian import (
    FlowEnsemble,
    advected_jacobian,
    comparison_experiment,
    duhamel_split,
    fd_jacobian_check,
    inverse_pullback,
    max_entry,
    ray_reconstruct,
    sign_preservation_check,
)
from .quadrature import adaptive_cubature, disk_rule
from .report import NORM_NOTE, Row, assertion, monitor
from .solver import SolverConfig, Trajectory, evolve

__all__ = [
    "SectorSpec",
    "fit_slope",
    "check_lemma_initial_norms",
    "check_riesz_bound",
    "check_beta_bounds",
    "check_beta_eta_products",
    "cos2_constant",
    "check_cos2_constant",
    "lambda_oracle",
    "lambda_lower_bound",
    "check_lambda_oracle",
    "sector_ratio_monitor",
    "gradient_growth_experiment",
    "norm_inflation_experiment",
    "kato_ponce_monitor",
    "check_flow_structure",
    "check_comparison",
    "select_x_star",
    "REPORT_HEADER",
]

log = logging.getLogger(__name__)

ASYMPTOTIC_NOTE = ("asymptotic growth claims are monitored only; inflation is asserted "
                   "at a fixed 1.5x threshold at preset scale")
REPORT_HEADER = [NORM_NOTE, ASYMPTOTIC_NOTE]

COS2_BOUND = math.pi / (3.0 * math.sqrt(2.0))

A_NORMS = "initial-data norm bound, independent of N and p"
A_RIESZ = "double Riesz sup bound along the flow"
A_BETA = "perturbation bounds (potential, double Riesz, W1p)"
A_PRODUCTS = "perturbation times flow-gradient products"
A_COS2 = "cos^2 average lower bound"
A_LAMBDA = "stagnation-point integral lower-bound chain"
A_SECTOR = "sector ratio bounds for the flow"
A_GROWTH = "deformation-gradient growth within the short window"
A_INFLATION = "W1p norm inflation for perturbed data"
A_KP = "local well-posedness bound for the vorticity norm"
A_FLOW = "Lagrangian flow structure"
A_COMPARISON = "flow comparison lemma"


def fit_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of log y against log x and its R²."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    a, b = np.polyfit(lx, ly, 1)
    resid = ly - (a * lx + b)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return float(a), r2


def _lp_nodes(values: np.ndarray, p: float, cell: float) -> float:
    return float((cell * np.sum(np.abs(values) ** p)) ** (1.0 / p))


# ---------------------------------------------------------------------------
# sector


def _in_sector(pts: np.ndarray, strict: bool = True) -> np.ndarray:
    x1, x2 = pts[:, 0], pts[:, 1]
    if strict:
        return (x1 > 0) & (x2 > 0) & (0.5 * x1 < x2) & (x2 < 2.0 * x1)
    return (x1 >= 0) & (x2 >= 0) & (0.5 * x1 <= x2) & (x2 <= 2.0 * x1)


@dataclass(frozen=True)
class SectorSpec:
    """Quadrature nodes on the first-quadrant support of ω₀, split by the sector S.

    ``nodes``/``weights`` cover every first-quadrant bump; ``in_sector`` marks
    those with ½x₁ < x₂ < 2x₁ (strictly).  ``omega`` holds ω₀ at the nodes.
    """

    nodes: np.ndarray
    weights: np.ndarray
    omega: np.ndarray
    in_sector: np.ndarray

    @classmethod
    def from_params(cls, params: ConstructionParams, n_radial: int = 24,
                    n_angular: int = 48) -> "SectorSpec":
        pts, wts = [], []
        for k, e1, e2, c, r, amp in bump_centres(params, PHI):
            if e1 > 0 and e2 > 0:
                p_, w_ = disk_rule(c, r, n_radial, n_angular)
                pts.append(p_)
                wts.append(w_)
        nodes = np.concatenate(pts)
        weights = np.concatenate(wts)
        om = omega0_analytic(params, nodes[:, 0], nodes[:, 1])
        return cls(nodes, weights, om, _in_sector(nodes))

    @property
    def sector_nodes(self) -> np.ndarray:
        return self.nodes[self.in_sector]


def _kernel(pts: np.ndarray) -> np.ndarray:
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    return pts[:, 0] * pts[:, 1] / (r2 * r2) / math.pi


# ---------------------------------------------------------------------------
# initial data


def check_lemma_initial_norms(Ms=(2.0, 3.0, 4.0), Ns=(1, 2, 3, 4, 5), ps=(2.1, 2.5, 3.0),
                              grid: GridSpec = GridSpec(2.0, 1024), N0: int = 1) -> list[Row]:
    """C(M,N,p) = (‖ω₀‖_{L^p} + ‖∇ω₀‖_{L^p})·M² across the sweep."""
    rows, C = [], {}
    for N in Ns:
        for p in ps:
            for M in Ms:
                prm = ConstructionParams(M=M, N=N, N0=N0, p=p)
                w = omega0(prm, grid)
                C[M, N, p] = sobolev_norm(w, p) * M**2
                rows.append(monitor("initial_norm_constant", {"M": M, "N": N, "p": p},
                                    C[M, N, p], None, A_NORMS))
            ref = C[Ms[0], N, p]
            dev = max(abs(C[M, N, p] / ref - 1.0) for M in Ms)
            rows.append(assertion("initial_norm_M_independence", {"N": N, "p": p}, dev, 0.0,
                                  dev <= 1e-12, 1e-12, A_NORMS, "M enters as a prefactor"))
    vals = list(C.values())
    spread = max(vals) / min(vals)
    rows.append(assertion("initial_norm_spread", {"L": grid.L, "n": grid.n}, spread, 2.0,
                          spread <= 2.0, 2.0, A_NORMS, "max/min of C over the sweep"))
    return rows


# ---------------------------------------------------------------------------
# Riesz bound


def rim_seeds(params: ConstructionParams, per_bump: int = 64) -> np.ndarray:
    """Points on the boundary circle of every bump of ω₀."""
    th = 2.0 * np.pi * np.arange(per_bump) / per_bump
    out = []
    for k, e1, e2, c, r, amp in bump_centres(params, PHI):
        out.append(np.stack([c[0] + r * np.cos(th), c[1] + r * np.sin(th)], axis=1))
    return np.concatenate(out)


def check_riesz_bound(traj: Trajectory, run: list[FlowEnsemble], params: ConstructionParams,
                      p: float | None = None) -> list[Row]:
    """sup_t‖R_iiω‖_∞ against (5/4 + t C_T)^{(p-2)/p} C_T M⁻², plus support growth."""
    p = params.p if p is None else p
    rows = []
    lhs = 0.0
    umax = 0.0
    rim = run[0].group("rim")
    r0 = float(np.hypot(*run[0].positions[rim].T).max())
    for ens in run:
        w = traj.at(ens.t)
        r11, r22 = riesz(w, 1, 1), riesz(w, 2, 2)
        lhs = max(lhs, sup_norm(r11), sup_norm(r22))
        u = biot_savart(w)
        umax = max(umax, float(np.max(u.magnitude())))
        C_T = ens.max_jacobian
        rhs = (1.25 + ens.t * C_T) ** ((p - 2.0) / p) * C_T * params.M**-2
        prm = {"t": ens.t}
        rows.append(monitor("riesz_sup", prm, lhs, rhs, A_RIESZ, "ratio lhs/rhs absorbs the constant"))
        rows.append(monitor("riesz_ratio", prm, lhs / rhs, None, A_RIESZ))
        rows.append(monitor("riesz_C_T", prm, C_T, None, A_RIESZ, "running max of Dη over seeds"))
        scale = sup_norm(w)
        ident = float(np.abs((r11 + r22 - w).values).max()) / scale if scale else 0.0
        rows.append(assertion("riesz_trace_identity", prm, ident, 0.0, ident <= 1e-10, 1e-10, A_RIESZ,
                              "R11 w + R22 w = w"))
        radius = float(np.hypot(*ens.positions[rim].T).max())
        bound = min(1.25, r0) + ens.t * umax
        rows.append(assertion("support_radius", prm, radius, bound, radius <= bound + 1e-12,
                              1e-12, A_RIESZ, f"initial radius {r0:.6g}; linear growth with sup|u|"))
    return rows


# ---------------------------------------------------------------------------
# perturbations


def _beta_sups(b: ScalarField):
    psi = poisson_inverse(b)
    g = gradient(psi)
    return {
        "d1_potential": sup_norm(g.component(1)),
        "d2_potential": sup_norm(g.component(2)),
        "R11": sup_norm(riesz(b, 1, 1)),
        "R12": sup_norm(riesz(b, 1, 2)),
        "R22": sup_norm(riesz(b, 2, 2)),
    }


def check_beta_bounds(params: ConstructionParams, grid: GridSpec, ns, p: float | None = None,
                      slope_tol: float = 0.2, r2_min: float = 0.98) -> list[Row]:
    """Decay of the perturbation's potential and double Riesz sup norms with n.

    The bounds are upper bounds: the asserted verdict is ``slope <= expected + tol``.
    The two-sided match ``|slope - expected| <= tol`` is reported as a monitor.
    """
    p = params.p if p is None else p
    prm0 = params.with_(p=p)
    use, rows = [], []
    for n in ns:
        why = prm0.perturbation_problem(grid, n)
        if why is None:
            use.append(n)
        else:
            rows.append(monitor("beta_skipped", {"n": n}, float(n), None, A_BETA, why))
    if len(use) < 3:
        raise ValueError(f"need at least 3 resolvable n to fit a slope, have {use}")
    expected = -2.0 + 2.0 / p
    sups = {}
    w1p = {}
    for n in use:
        b = beta(prm0.with_(n_pert=n), grid)
        sups[n] = _beta_sups(b)
        w1p[n] = sobolev_norm(b, p)
        for name, v in sups[n].items():
            rows.append(monitor(f"beta_sup_{name}", {"n": n, "p": p}, v, None, A_BETA))
        rows.append(monitor("beta_w1p", {"n": n, "p": p}, w1p[n], None, A_BETA))
    for name in sups[use[0]]:
        vals = [sups[n][name] for n in use]
        slope, r2 = fit_slope(use, vals)
        prm = {"quantity": name, "p": p}
        rows.append(monitor("beta_slope_r2", prm, r2, r2_min, A_BETA))
        if r2 < r2_min:
            rows.append(monitor("beta_slope", prm, slope, expected, A_BETA,
                                f"no verdict: R^2 = {r2:.4f} < {r2_min}"))
        else:
            rows.append(assertion("beta_slope", prm, slope, expected, slope <= expected + slope_tol,
                                  slope_tol, A_BETA, "upper bound: slope <= expected + tol"))
        rows.append(monitor("beta_slope_match", prm, abs(slope - expected), slope_tol, A_BETA,
                            "two-sided |slope - expected|"))
        worst = max(b / a for a, b in zip(vals, vals[1:]))
        rows.append(assertion("beta_decay_monotone", prm, worst, 1.1, worst <= 1.1, 0.1, A_BETA,
                              "largest successive ratio (10% allowance)"))
    spread = max(w1p.values()) / min(w1p.values())
    rows.append(assertion("beta_w1p_uniform", {"p": p}, spread, 2.0, spread <= 2.0, 2.0, A_BETA,
                          "max/min over n"))
    return rows


def _beta_node_grads(params: ConstructionParams, n: int, pts: np.ndarray):
    return beta_analytic_gradient(params.with_(n_pert=n), pts[:, 0], pts[:, 1])


def check_beta_eta_products(ensemble: FlowEnsemble, params: ConstructionParams, grid: GridSpec,
                            ns, p: float | None = None, slope_max: float = -0.8) -> list[Row]:
    """‖∂₂β_n ∂₁η₂‖_{L^p} (decays) and ‖∂₁β_n ∂₂η₂‖_{L^p} (stays large) at t₀.

    The ``beta`` seed group must hold the grid nodes of the support of every β_n.
    """
    p = params.p if p is None else p
    idx = ensemble.group("beta")
    pts = ensemble.seeds[idx]
    J = ensemble.jacobians[idx]
    d1eta2, d2eta2 = J[:, 1, 0], J[:, 1, 1]
    xs = ensemble.jacobians[ensemble.group("x_star")]
    local = float(np.abs(xs[:, 1, 1]).max())
    rows, first, used = [], [], []
    for n in ns:
        why = params.perturbation_problem(grid, n)
        if why is not None:
            rows.append(monitor("products_skipped", {"n": n}, float(n), None, A_PRODUCTS, why))
            continue
        g1, g2 = _beta_node_grads(params, n, pts)
        a = _lp_nodes(g2 * d1eta2, p, grid.cell_area())
        b = _lp_nodes(g1 * d2eta2, p, grid.cell_area())
        ref = local * _lp_nodes(g1, p, grid.cell_area())
        prm = {"n": n, "t": ensemble.t}
        rows.append(monitor("products_first", prm, a, None, A_PRODUCTS, "||d2 beta d1 eta2||_p"))
        rows.append(monitor("products_second", prm, b, ref, A_PRODUCTS,
                            "||d1 beta d2 eta2||_p vs |d2 eta2(x*)| ||d1 beta||_p"))
        first.append(a)
        used.append(n)
    if len(used) >= 2 and min(first) > 0:
        slope, r2 = fit_slope(used, first)
        rows.append(assertion("products_first_slope", {"t": ensemble.t}, slope, -1.0,
                              slope <= slope_max, slope_max, A_PRODUCTS, f"R^2 = {r2:.4f}"))
    elif used:
        rows.append(monitor("products_first_slope", {"t": ensemble.t}, math.nan, -1.0, A_PRODUCTS,
                            "first product vanishes (identity flow)"))
    return rows


def cos2_constant(lam: float, x1_star: float, tol: float = 1e-12) -> float:
    """(∫∫_{[-π/6, π/6]²} cos²(λx₁ + λ²x*₁) dx)^{1/2} by adaptive cubature."""
    c = lam * lam * x1_star
    val, _ = adaptive_cubature(lambda a, b: np.cos(lam * a + c) ** 2,
                               (-math.pi / 6, -math.pi / 6, math.pi / 3), tol=tol)
    return math.sqrt(val)


def cos2_closed_form(lam: float, x1_star: float) -> float:
    c = lam * lam * x1_star
    v = (math.pi / 3) * (math.pi / 6 + math.sin(lam * math.pi / 3) * math.cos(2 * c) / (2 * lam))
    return math.sqrt(v)


def check_cos2_constant(pairs) -> list[Row]:
    """The lower bound π/(3√2) for λ = 3n (where sin(λπ/3) vanishes)."""
    rows = []
    for lam, x1 in pairs:
        v = cos2_constant(lam, x1)
        prm = {"lambda": float(lam), "x1_star": float(x1)}
        rows.append(assertion("cos2_constant", prm, v, COS2_BOUND, v >= COS2_BOUND - 1e-6, 1e-6, A_COS2,
                              f"closed form {cos2_closed_form(lam, x1)!r}"))
    return rows


# ---------------------------------------------------------------------------
# stagnation-point integral


def lambda_oracle(params: ConstructionParams, tol: float = 1e-13) -> float:
    """(1/π)∫ x₁x₂|x|⁻⁴ ω₀ dx by adaptive cubature over every bump of ω₀."""
    def f(a, b):
        r2 = a * a + b * b
        return a * b / (r2 * r2) * omega0_analytic(params, a, b) / math.pi

    total = 0.0
    for k, e1, e2, c, r, amp in bump_centres(params, PHI):
        v, _ = adaptive_cubature(f, (c[0] - r, c[1] - r, 2 * r), tol=tol * abs(amp))
        total += v
    return total


def _r12_modes(w: ScalarField):
    return centred_modes(riesz(w, 1, 2).values)


def check_lambda_oracle(params: ConstructionParams, grid: GridSpec, rtol: float = 1e-4) -> list[Row]:
    """-R₁₂ω₀(0) against the cubature oracle, and direct sum against NUFFT at the origin."""
    w = omega0(params, grid)
    modes = _r12_modes(w)
    direct = -float(sample_modes(modes, grid, np.zeros((1, 2)), method="direct")[0])
    nufft = -float(sample_modes(modes, grid, np.zeros((1, 2)), method="nufft")[0])
    oracle = lambda_oracle(params)
    prm = {"N": params.N, "M": params.M, "L": grid.L, "n": grid.n}
    rel = abs(direct / oracle - 1.0)
    two = abs(direct - nufft) / abs(direct)
    return [
        assertion("lambda_oracle", prm, direct, oracle, rel <= rtol, rtol, A_LAMBDA,
                  "spectral -R12 w0(0) vs adaptive cubature"),
        assertion("lambda_two_paths", prm, nufft, direct, two <= 1e-6, 1e-6, A_LAMBDA,
                  "direct Fourier sum vs non-uniform transform"),
    ]


def lambda_lower_bound(traj: Trajectory, ensemble: FlowEnsemble, sector: SectorSpec,
                       rtol: float = 1e-3) -> list[Row]:
    """full ≥ quadrant ≥ sector for -Λ(t, 0) at the ensemble's time.

    The ``quadrant`` seed group must hold ``sector.nodes`` in order.
    """
    idx = ensemble.group("quadrant")
    eta = ensemble.positions[idx]
    w = traj.at(ensemble.t)
    full = -float(sample_modes(_r12_modes(w), w.grid, np.zeros((1, 2)), method="direct")[0])
    contrib = sector.weights * _kernel(eta) * sector.omega
    quad = float(np.sum(contrib))
    sect = float(np.sum(contrib[sector.in_sector]))
    prm = {"t": ensemble.t}
    rows = [
        monitor("lambda_full", prm, full, None, A_LAMBDA, "-R12 w(t, 0)"),
        monitor("lambda_quadrant", prm, quad, None, A_LAMBDA, "particle quadrature, first quadrant"),
        monitor("lambda_sector", prm, sect, None, A_LAMBDA, "particle quadrature, sector S"),
        assertion("lambda_full_ge_quadrant", prm, full, quad, full >= quad - rtol * abs(quad), rtol,
                  A_LAMBDA),
        assertion("lambda_quadrant_ge_sector", prm, quad, sect, quad >= sect - rtol * abs(sect), rtol,
                  A_LAMBDA),
    ]
    if ensemble.t == 0.0:
        neg = float(min(0.0, (_kernel(eta) * sector.omega).min()))
        rows.append(assertion("lambda_integrand_nonnegative", prm, neg, 0.0, neg >= 0.0, 0.0, A_LAMBDA,
                              "first-quadrant integrand at the identity flow"))
    return rows


# ---------------------------------------------------------------------------
# sector ratios


def sector_ratio_monitor(run: list[FlowEnsemble], M: float, T: float, factor: float = 10.0,
                         group: str = "sector") -> list[Row]:
    """min/max of η₁/η₂ over sector seeds per time against M⁻² and M²."""
    cutoff = min(T, M**-3 / (2 * math.sqrt(5.0)))
    rows = []
    lo_ref, hi_ref = M**-2, M**2
    for ens in run:
        pos = ens.positions[ens.group(group)]
        keep = pos[:, 1] > 1e-12
        r = pos[keep, 0] / pos[keep, 1]
        prm = {"t": ens.t, "cutoff": cutoff}
        note = "beyond cutoff" if ens.t > cutoff else ""
        lo, hi = float(r.min()), float(r.max())
        rows.append(monitor("sector_ratio_min", prm, lo, lo_ref, A_SECTOR, note))
        rows.append(monitor("sector_ratio_max", prm, hi, hi_ref, A_SECTOR, note))
        rows.append(monitor("sector_excluded", prm, int((~keep).sum()), 0, A_SECTOR))
        ok = lo >= lo_ref / factor and hi <= factor * hi_ref
        rows.append(assertion("sector_ratio_window", prm, hi / lo, factor * hi_ref / (lo_ref / factor),
                              ok, factor, A_SECTOR, f"empirical constant {factor:g}"))
        if ens.t == 0.0:
            ok0 = lo >= 0.5 * (1 - 1e-12) and hi <= 2.0 * (1 + 1e-12)
            rows.append(assertion("sector_ratio_initial", prm, hi, 2.0, ok0, 0.0, A_SECTOR,
                                  "ratio within [1/2, 2] at t = 0"))
    return rows


# ---------------------------------------------------------------------------
# gradient growth


def _inverse_map_sup_jacobian(traj: Trajectory, t: float) -> float:
    """sup over the grid of the max-entry norm of DX, X = η⁻¹; equals sup‖Dη‖."""
    D1, D2 = traj.inverse_map(t)
    g1, g2 = gradient(D1), gradient(D2)
    return float(max(np.abs(1 + g1.u1).max(), np.abs(g1.u2).max(),
                     np.abs(g2.u1).max(), np.abs(1 + g2.u2).max()))


def gradient_growth_experiment(M: float = 3.0, Ns=(1, 2, 3, 4, 5), p: float = 2.5, N0: int = 1,
                               grid: GridSpec = GridSpec(2.0, 1024),
                               solver: SolverConfig = SolverConfig()) -> list[Row]:
    """Growth of sup‖Dη‖ by t = M⁻³ for increasing N at fixed M.

    sup‖Dη(t)‖ is read from the advected inverse map on the whole grid.  The
    stretching at the stagnation point, exp|∫Λ(s, 0)ds|, is recorded alongside.
    """
    rows, growth, origin = [], {}, {}
    T = min(1.0, M**-3)
    for N in Ns:
        prm0 = ConstructionParams(M=M, N=N, N0=N0, p=p)
        traj = evolve(omega0(prm0, grid), T, solver, track_inverse_map=True)
        lam0 = []
        for t, w in zip(traj.times, traj.snapshots):
            s = _inverse_map_sup_jacobian(traj, t)
            rows.append(monitor("growth_series", {"N": N, "t": t}, s, None, A_GROWTH))
            lam0.append(float(sample_modes(_r12_modes(w), grid, np.zeros((1, 2)), method="direct")[0]))
        I = float(np.trapezoid(lam0, traj.times))
        growth[N] = s - 1.0
        origin[N] = math.exp(abs(I)) - 1.0
        rows.append(monitor("growth_exceeds_M", {"N": N, "t": T}, s, M, A_GROWTH,
                            "asymptotic claim sup|D eta| > M, monitored"))
        rows.append(monitor("growth_origin_stretch", {"N": N, "t": T}, origin[N], None, A_GROWTH,
                            "exp|int Lambda(s,0) ds| - 1"))
    if len(Ns) >= 2:
        pairs = list(zip(Ns, Ns[1:]))
        inc = sum(growth[b] > growth[a] for a, b in pairs)
        rows.append(assertion("growth_trend", {"M": M, "t": T}, inc, len(pairs), inc >= len(pairs), 0,
                              A_GROWTH, "consecutive N pairs with larger sup|D eta| - 1"))
        inc0 = sum(origin[b] > origin[a] for a, b in pairs)
        rows.append(assertion("growth_origin_trend", {"M": M, "t": T}, inc0, len(pairs),
                              inc0 >= len(pairs), 0, A_GROWTH,
                              "consecutive N pairs with larger stagnation-point stretching"))
    return rows


# ---------------------------------------------------------------------------
# x* selection and inflation


def select_x_star(ensemble: FlowEnsemble, params: ConstructionParams, grid: GridSpec, ns,
                  group: str = "lattice", level: float = 0.9):
    """x* maximising |∂₂η₂(t₀)| over admissible lattice seeds, and δ.

    Admissible seeds lie in the first quadrant with min x_i > 2/λ and
    max x_i + 2/λ ≤ L/4 for the smallest λ in ``ns``.  δ is the largest radius
    around x* within which |∂₂η₂| stays above ``level`` times its value at x*.
    """
    lam = 3 * min(ns)
    idx = ensemble.group(group)
    x = ensemble.seeds[idx]
    v = np.abs(ensemble.jacobians[idx, 1, 1])
    ok = (x.min(axis=1) > 2.0 / lam) & (x.max(axis=1) + 2.0 / lam <= grid.L / 4)
    if not ok.any():
        raise ValueError("no admissible seed for x*")
    j = int(np.argmax(np.where(ok, v, -np.inf)))
    xs = x[j]
    d = np.hypot(*(x - xs).T)
    below = d[v < level * v[j]]
    delta = float(below.min()) if below.size else float(d.max())
    return (float(xs[0]), float(xs[1])), delta


def _support_nodes(params: ConstructionParams, grid: GridSpec, lam: float) -> np.ndarray:
    X1, X2 = grid.mesh()
    m = np.zeros(X1.shape, bool)
    R = RHO.support_radius / lam
    for e1 in (1, -1):
        for e2 in (1, -1):
            m |= np.hypot(X1 - e1 * params.x_star[0], X2 - e2 * params.x_star[1]) < R
    return np.stack([X1[m], X2[m]], axis=1)


def _theta_proxy(a: Trajectory, b: Trajectory) -> float:
    out = 0.0
    for wa, wb in zip(a.snapshots, b.snapshots):
        d = ScalarField(wa.grid, wb.values - wa.values, is_mean_zero=True)
        u = biot_savart(d)
        vel = float(np.abs(np.stack([u.u1, u.u2])).max())
        du = max(float(np.abs(riesz(d, i, j).values).max()) for i, j in ((1, 1), (1, 2), (2, 2)))
        out = max(out, vel + du)
    return out


def norm_inflation_experiment(params: ConstructionParams, grid: GridSpec, ns, base: Trajectory,
                              ensemble: FlowEnsemble, solver: SolverConfig = SolverConfig(),
                              p: float | None = None, threshold: float = 1.5,
                              witness_rtol: float = 1e-6) -> list[Row]:
    """Perturbed runs ω₀ + β_n against the base run at t₀ = ``ensemble.t``.

    ``ensemble`` is the base flow at t₀ with a ``beta`` group holding the grid
    nodes of the perturbation supports; ``base`` must carry the inverse-map
    tracers at t₀ for the second witness evaluation.
    """
    p = params.p if p is None else p
    t0 = ensemble.t
    w0 = base.snapshots[0]
    base_norm = sobolev_norm(base.at(t0), p)
    rows = [monitor("inflation_base_norm", {"t": t0}, base_norm, None, A_INFLATION, ASYMPTOTIC_NOTE)]
    idx = ensemble.group("beta")
    pts = ensemble.seeds[idx]
    J = ensemble.jacobians[idx]
    Jadv = advected_jacobian(base, ensemble, "beta")
    nsteps = len(base.times) - 1
    data, ratios = {}, {}
    for n in ns:
        why = params.perturbation_problem(grid, n)
        if why is not None:
            log.warning("skipping n = %d: %s", n, why)
            rows.append(monitor("inflation_skipped", {"n": n}, float(n), None, A_INFLATION, why))
            continue
        pn = params.with_(n_pert=n)
        wn0 = omega0n(w0, beta(pn, grid))
        data[n] = sobolev_norm(wn0, p)
        traj = evolve(wn0, t0, replace(solver, snapshot_every=1), nsteps=nsteps)
        sol = sobolev_norm(traj.terminal, p)
        ratios[n] = sol / base_norm
        g1, g2 = _beta_node_grads(params, n, pts)
        cell = grid.cell_area()
        direct = _lp_nodes(-g1 * J[:, 1, 1] + g2 * J[:, 1, 0], p, cell)
        other = _lp_nodes(-g1 * Jadv[:, 1, 1] + g2 * Jadv[:, 1, 0], p, cell)
        big = _lp_nodes(g1 * J[:, 1, 1], p, cell)
        small = _lp_nodes(g2 * J[:, 1, 0], p, cell)
        prm = {"n": n, "t": t0}
        rows += [
            monitor("inflation_data_norm", prm, data[n], None, A_INFLATION),
            monitor("inflation_solution_norm", prm, sol, base_norm, A_INFLATION),
            monitor("inflation_ratio", prm, ratios[n], threshold, A_INFLATION),
            monitor("inflation_witness", prm, direct, None, A_INFLATION,
                    "||-d1 beta d2 eta2 + d2 beta d1 eta2||_p"),
            assertion("inflation_witness_two_ways", prm, other, direct,
                      abs(other - direct) <= witness_rtol * direct, witness_rtol, A_INFLATION,
                      "particle Jacobians vs advected inverse map"),
            assertion("inflation_triangle_split", prm, direct, big - small, direct >= big - small, 0.0,
                      A_INFLATION, "witness >= ||d1 beta d2 eta2|| - ||d2 beta d1 eta2||"),
            monitor("inflation_theta_proxy", prm, _theta_proxy(base, traj), None, A_INFLATION,
                    "sup_t |u_n - u| + |Du_n - Du| on the grid"),
        ]
    if data:
        spread = max(data.values()) / min(data.values())
        rows.append(assertion("inflation_data_uniform", {"p": p}, spread, 2.0, spread <= 2.0, 2.0,
                              A_INFLATION, "max/min of data norms over n"))
        top = max(ratios)
        rows.append(assertion("inflation_threshold", {"n": top, "t": t0}, ratios[top], threshold,
                              ratios[top] >= threshold, threshold, A_INFLATION,
                              "largest resolvable n"))
    return rows


# ---------------------------------------------------------------------------
# bounded norms


def kato_ponce_monitor(traj: Trajectory, p: float, reference: Trajectory | None = None,
                       rtol: float = 0.05) -> list[Row]:
    """‖ω(t)‖_{W^{1,p}} along the run; K is its max.  Optional resolution check."""
    rows = []
    vals = []
    for t, w in zip(traj.times, traj.snapshots):
        v = sobolev_norm(w, p)
        vals.append(v)
        rows.append(monitor("kp_series", {"t": t, "n": traj.grid.n}, v, None, A_KP))
    K = max(vals)
    rows.append(monitor("kp_K", {"n": traj.grid.n}, K, None, A_KP))
    if reference is not None:
        K2 = max(sobolev_norm(w, p) for w in reference.snapshots)
        rel = abs(K2 / K - 1.0)
        rows.append(assertion("kp_resolution", {"n": traj.grid.n, "n_ref": reference.grid.n},
                              rel, 0.0, rel <= rtol, rtol, A_KP, f"K on the reference grid {K2!r}"))
    return rows


# ---------------------------------------------------------------------------
# flow structure and comparison


def check_flow_structure(traj: Trajectory, run: list[FlowEnsemble], M: float, spacing: float,
                         pullback_tol: float = 1e-2) -> list[Row]:
    """Volume, symmetry, stagnation, split and ray identities along a flow run."""
    rows = []
    for ens in run:
        prm = {"t": ens.t}
        det = ens.det_drift()
        rows.append(assertion("flow_det", prm, det, 0.0, det <= 1e-6, 1e-6, A_FLOW))
        stag = ens.stagnation_defect()
        rows.append(assertion("flow_stagnation", prm, stag, 0.0, stag <= 1e-8, 1e-8, A_FLOW))
        a1, a2 = ens.axis_defects()
        rows.append(assertion("flow_axis", prm, max(a1, a2), 0.0, max(a1, a2) <= 1e-8, 1e-8, A_FLOW))
        sp = sign_preservation_check(ens)
        rows.append(assertion("flow_sign", prm, sp.fraction, 1.0, sp.fraction == 1.0, 0.0, A_FLOW,
                              f"{sp.count} first-quadrant seeds"))
        dh = duhamel_split(ens)
        rows.append(assertion("flow_duhamel", prm, dh.max_residual, 0.0, dh.max_residual <= 1e-5, 1e-5,
                              A_FLOW, "|A + B_hat - D eta|"))
        rows.append(assertion("flow_detA", prm, dh.det_A_defect, 0.0, dh.det_A_defect <= 1e-8, 1e-8,
                              A_FLOW))
        for x in sorted(ens.rays):
            rr = ray_reconstruct(ens, x)
            lim = 1e-5 * math.hypot(*x)
            rows.append(assertion("flow_ray", {**prm, "x1": x[0], "x2": x[1]}, rr.residual, 0.0,
                                  rr.residual <= lim, lim, A_FLOW))
        rows.append(monitor("flow_lambda_integral", prm, float(np.abs(ens.lambda_integral).max()),
                            math.log(2 * M), A_FLOW, "against log(2M); bound needs the contradiction "
                            "hypothesis"))
        rows.append(monitor("flow_C_T", prm, ens.max_jacobian, None, A_FLOW))
    last = run[-1]
    prm = {"t": last.t}
    fd = fd_jacobian_check(last, "fd_base", "fd", spacing)
    rows.append(assertion("flow_fd_jacobian", prm, fd, 0.0, fd <= 0.05, 0.05, A_FLOW,
                          f"central differences, spacing {spacing!r}"))
    Jadv = advected_jacobian(traj, last, "lattice")
    J = last.jacobians[last.group("lattice")]
    rel = float(max_entry(Jadv - J).max() / max_entry(J).max())
    rows.append(assertion("flow_advected_crosscheck", prm, rel, 0.0, rel <= 0.01, 0.01, A_FLOW,
                          "particle vs advected inverse map"))
    pb = inverse_pullback(traj, last, "lattice")
    rows.append(assertion("flow_pullback", prm, pb, 0.0, pb <= pullback_tol, pullback_tol, A_FLOW,
                          "w(t, eta(t,x)) vs w0(x)"))
    rows.append(monitor("flow_boundary", prm, float(last.boundary_contaminated), 0.0, A_FLOW))
    return rows


def check_comparison(eps=(1e-2, 5e-3, 2.5e-3), n: int = 64, T: float = 1.0, nsteps: int = 100,
                     tol: float = 0.15) -> list[Row]:
    """Taylor-Green flow against the same flow plus ε(sin x₂, 0), all frozen."""
    grid = GridSpec(2 * math.pi, n)
    X1, X2 = grid.mesh()
    tg = ScalarField(grid, 2 * np.sin(X1) * np.sin(X2), is_mean_zero=True)
    v = VectorField(grid, np.sin(X2), np.zeros_like(X2))
    res = comparison_experiment(tg, v, T, eps, nsteps=nsteps)
    rows = []
    for e, l, r in zip(res.eps, res.lhs, res.rhs):
        rows.append(monitor("comparison_lhs", {"eps": e}, l, r, A_COMPARISON, "reference = rhs"))
        rows.append(monitor("comparison_ratio", {"eps": e}, l / r, None, A_COMPARISON))
    for name, s in (("comparison_slope", res.slope), ("comparison_slope_jacobian", res.slope_jacobian)):
        rows.append(assertion(name, {"T": T}, s, 1.0, abs(s - 1.0) <= tol, tol, A_COMPARISON))
    lo, hi = min(a / e for a, e in zip(res.lhs, res.eps)), max(a / e for a, e in zip(res.lhs, res.eps))
    rows.append(assertion("comparison_linear_response", {"T": T}, hi / lo - 1, 0.0, hi / lo - 1 <= 0.2,
                          0.2, A_COMPARISON, "spread of lhs/eps"))
    return rows
