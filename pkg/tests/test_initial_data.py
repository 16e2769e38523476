import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vilab.fields import GridSpec, ScalarField, lp_norm, parity_defect, sobolev_norm
from vilab.initial_data import (
    PHI,
    RHO,
    ConstructionParams,
    SupportOverlapError,
    UnresolvableError,
    beta,
    beta_analytic,
    beta_analytic_gradient,
    bump_centres,
    omega0,
    omega0_analytic,
    omega0_analytic_gradient,
    omega0_components,
    omega0n,
    quadrupole,
)

SMALL = GridSpec(4.0, 256)


def test_preset_parameters():
    p = ConstructionParams()
    assert (p.M, p.N, p.N0, p.p) == (3.0, 3, 1, 2.5)
    assert p.T_horizon == pytest.approx(1 / 27)
    assert p.lam == 3 and p.k == 9
    assert list(p.scales()) == [1, 2, 3, 4]
    assert p.with_(M=4).T_horizon == 4.0**-3


@pytest.mark.parametrize("kw, msg", [
    ({"p": 1.5}, "p must lie in"),
    ({"p": 3.5}, "p must lie in"),
    ({"M": 1.0}, "M must be"),
    ({"N": 0}, "N must be"),
    ({"n_pert": 0}, "n_pert"),
    ({"T_horizon": 1.0}, "T_horizon"),
    ({"delta": 0.0}, "delta"),
])
def test_invalid_parameters(kw, msg):
    with pytest.raises(ValueError, match=msg):
        ConstructionParams(**kw)


def test_bump_value_at_centre_matches_closed_form():
    p = ConstructionParams(N=1)
    # at (1/2, 1/2) only the k = 1 bump is nonzero and φ(0) = 1
    expected = 3.0**-2 * 1 ** (-1 / 2.5) * 2.0 ** (-1 + 2 / 2.5)
    assert omega0_analytic(p, 0.5, 0.5) == pytest.approx(expected, rel=1e-15)
    assert omega0_analytic(p, -0.5, 0.5) == pytest.approx(-expected, rel=1e-15)


def test_supports_are_disjoint():
    cs = bump_centres(ConstructionParams(N=5))
    for i, a in enumerate(cs):
        for b in cs[i + 1:]:
            d = math.dist(a[3], b[3])
            assert d > a[4] + b[4]


def test_grid_field_matches_analytic():
    p = ConstructionParams()
    g = GridSpec(4.0, 512)
    w = omega0(p, g)
    X, Y = g.mesh()
    assert np.abs(w.values - omega0_analytic(p, X, Y)).max() < 1e-15
    assert w.is_mean_zero and abs(w.values.mean()) < 1e-18


def test_odd_odd_symmetry():
    w = omega0(ConstructionParams(), GridSpec(4.0, 512))
    d = parity_defect(w)
    assert d[0] == 0.0 and d[1] == 0.0


def test_components_sum_to_field():
    p = ConstructionParams(N=2)
    parts = omega0_components(p, SMALL)
    total = sum(parts.values(), ScalarField.zeros(SMALL))
    assert np.allclose(total.values, omega0(p, SMALL).values, atol=1e-16)
    assert sorted(parts) == [1, 2, 3]


def test_unresolvable_scale_is_rejected():
    with pytest.raises(UnresolvableError, match="smallest scale"):
        omega0(ConstructionParams(N=6), GridSpec(8.0, 256))


@given(st.floats(-1.4, 1.4), st.floats(-1.4, 1.4))
def test_analytic_gradient_matches_difference_quotient(x1, x2):
    p = ConstructionParams(N=2)
    h = 1e-6
    g1, g2 = omega0_analytic_gradient(p, x1, x2)
    d1 = (omega0_analytic(p, x1 + h, x2) - omega0_analytic(p, x1 - h, x2)) / (2 * h)
    d2 = (omega0_analytic(p, x1, x2 + h) - omega0_analytic(p, x1, x2 - h)) / (2 * h)
    assert g1 == pytest.approx(d1, abs=1e-6)
    assert g2 == pytest.approx(d2, abs=1e-6)


def test_quadrupole_is_odd_odd():
    q = quadrupole(PHI, SMALL)
    assert parity_defect(q)[:2] == (0.0, 0.0)
    # cell centres miss the peak φ(0) = 1 by O(h^2)
    assert q.values.max() == pytest.approx(1.0, abs=5e-3)


def test_profiles():
    assert PHI(0.0, 0.0) == 1.0 and PHI(0.25, 0.0) == 0.0
    assert RHO(0.5, 0.5) == 1.0 and RHO(2.0, 0.0) == 0.0
    r = np.linspace(0, 2.5, 200)
    assert np.all(np.diff(RHO.radial(r)) <= 1e-15)


def test_beta_parity_and_support():
    p = ConstructionParams(n_pert=2, x_star=(1.0, 1.0))
    g = GridSpec(8.0, 1024)
    b = beta(p, g)
    odd1, odd2, even1, even2 = parity_defect(b)
    assert even1 <= 1e-12 and odd2 <= 1e-12
    X, Y = g.mesh()
    far = np.min([np.hypot(X - e1, Y - e2) for e1 in (1, -1) for e2 in (1, -1)], axis=0) > 2 / p.lam
    assert np.all(b.values[far] == 0.0)
    assert np.abs(b.values - beta_analytic(p, X, Y)).max() < 1e-15


def test_beta_amplitude_closed_form():
    # on the plateau ρ = 1, so β = λ^{-1+2/p} k^{-1/2} sin(k x1)
    p = ConstructionParams(n_pert=1, x_star=(1.0, 1.0))
    x1 = 1.0 + 0.5 * math.pi / 9
    amp = 3.0 ** (-1 + 2 / 2.5) / 3.0
    assert beta_analytic(p, x1, 1.0) == pytest.approx(amp * math.sin(9 * x1), rel=1e-14)


@given(st.floats(0.2, 1.8), st.floats(0.2, 1.8))
def test_beta_gradient_matches_difference_quotient(x1, x2):
    p = ConstructionParams(n_pert=1, x_star=(1.0, 1.0))
    h = 1e-6
    g1, g2 = beta_analytic_gradient(p, x1, x2)
    d1 = (beta_analytic(p, x1 + h, x2) - beta_analytic(p, x1 - h, x2)) / (2 * h)
    d2 = (beta_analytic(p, x1, x2 + h) - beta_analytic(p, x1, x2 - h)) / (2 * h)
    assert g1 == pytest.approx(d1, abs=1e-6)
    assert g2 == pytest.approx(d2, abs=1e-6)


def test_beta_overlap_and_resolution_errors():
    with pytest.raises(SupportOverlapError):
        beta(ConstructionParams(n_pert=1, x_star=(0.5, 1.0)), GridSpec(8.0, 1024))
    with pytest.raises(UnresolvableError, match="carrier"):
        beta(ConstructionParams(n_pert=5, x_star=(1.0, 1.0)), GridSpec(8.0, 1024))
    assert ConstructionParams().perturbation_problem(GridSpec(8.0, 1024), 4) is None


def test_beta_w1p_uniform_in_n():
    g = GridSpec(8.0, 1024)
    norms = [sobolev_norm(beta(ConstructionParams(n_pert=n), g), 2.5) for n in (1, 2, 3, 4)]
    assert max(norms) / min(norms) <= 2.0


def test_omega0n_adds_and_triangle_inequality():
    p = ConstructionParams(n_pert=1)
    g = GridSpec(8.0, 1024)
    w0 = omega0(p, g)
    b = beta(p, g)
    wn = omega0n(w0, b)
    assert np.array_equal(wn.values, w0.values + b.values)
    assert np.array_equal(omega0n(w0, ScalarField.zeros(g)).values, w0.values)
    assert sobolev_norm(wn, 2.5) <= sobolev_norm(w0, 2.5) + sobolev_norm(b, 2.5)
    assert lp_norm(wn, 2.5) > 0
