import math
from fractions import Fraction

import numpy as np
import pytest

from anisopolar import homogeneous as hg
from anisopolar import measure
from anisopolar import smoothsurface as ss
from anisopolar.smoothsurface import (ChartError, ChartPatch, angle_atlas,
                                      chart_density, chart_integrate,
                                      cube_atlas, euler_identity_check, grad,
                                      grad_exact, volume_form_ratio_check)


def test_grad_examples():
    assert np.allclose(grad(hg.norm_power(2, 2.0), np.array([1.0, 2.0])),
                       [2.0, 4.0], atol=1e-12)
    x = np.array([0.7, -1.3])
    assert np.allclose(grad(hg.p1(), x), [2 * x[0], 4 * x[1] ** 3], atol=1e-12)
    assert np.allclose(grad(hg.p2(), np.array([1.0, 1.0])), [3.5, 7.0], atol=1e-12)


def test_grad_exact_rational():
    assert grad_exact(hg.p2(), (1, 1)) == (Fraction(7, 2), Fraction(7))
    assert grad_exact(hg.p1(), (Fraction(1, 2), 2)) == (Fraction(1), Fraction(32))


def test_grad_fd_fallback_matches_analytic():
    Q = hg.norm_power(2, 2.0)
    smooth_weier = hg.make_weierstrass(Q, lambda eta: np.ones(len(eta)))
    pts = hg.probe_points(2, 20, seed=1)
    assert np.allclose(grad(smooth_weier, pts), grad(Q, pts), atol=1e-6)


def test_euler_identity_norm_square():
    P = hg.norm_power(2, 2.0)
    grid = hg.sphere_grid(P, 200, seed=2)
    assert euler_identity_check(P, grid) <= 1e-10


def test_euler_identity_p1_point():
    P = hg.p1()
    eta = np.array([[0.0, 1.0]])
    g = grad(P, eta)
    e = P.exponent.entries
    assert float(np.sum(g * (eta @ e.T))) == pytest.approx(1.0, abs=1e-12)


def test_euler_identity_p2_grid():
    P = hg.p2()
    assert euler_identity_check(P, hg.sphere_grid(P, 1000, seed=3)) <= 1e-8


def test_chart_density_circle_norm():
    P = hg.norm_power(2, 1.0)
    chart = angle_atlas(P)[0]
    u = np.linspace(0.1, 3.0, 40)[:, None]
    h = chart_density(P, chart, u)
    assert np.allclose(h, 1.0, atol=1e-8)


def test_chart_density_norm_square_is_half():
    P = hg.norm_power(2, 2.0)
    chart = angle_atlas(P)[0]
    u = np.linspace(0.1, 3.0, 40)[:, None]
    assert np.allclose(chart_density(P, chart, u), 0.5, atol=1e-8)


def test_chart_density_degenerate_chart_errors():
    P = hg.norm_power(2, 1.0)
    frozen = ChartPatch(param=lambda u: np.tile([[1.0, 0.0]], (len(u), 1)),
                        lo=[0.0], hi=[1.0],
                        weight=lambda u: np.ones(len(u)))
    with pytest.raises(ChartError):
        chart_density(P, frozen, np.array([[0.5]]))


def test_chart_density_rejects_off_surface_chart():
    P = hg.norm_power(2, 1.0)
    off = ChartPatch(param=lambda u: 1.1 * np.stack([np.cos(u[:, 0]), np.sin(u[:, 0])], axis=1),
                     lo=[0.0], hi=[1.0], weight=lambda u: np.ones(len(u)))
    with pytest.raises(ChartError):
        chart_density(P, off, np.array([[0.5]]))


def test_chart_integrate_circumference():
    P = hg.norm_power(2, 1.0)
    val = chart_integrate(P, lambda eta: np.ones(len(eta)))
    assert val == pytest.approx(2 * math.pi, abs=1e-6)


def test_chart_integrate_norm_square():
    P = hg.norm_power(2, 2.0)
    val = chart_integrate(P, lambda eta: np.ones(len(eta)))
    assert val == pytest.approx(math.pi, abs=1e-6)


def test_chart_integrate_p2_matches_mc():
    P = hg.p2()
    val = chart_integrate(P, lambda eta: np.ones(len(eta)))
    mc = measure.sigma(P, measure.region_all(), 2 ** 17, seed=5)
    assert abs(val - mc.value) <= 3 * mc.stderr


def test_chart_integrate_refinement_invariance():
    P = hg.p2()
    base = angle_atlas(P)
    val = chart_integrate(P, lambda eta: np.ones(len(eta)), charts=base)

    split = []
    for chart in base:
        mid = 0.5 * (chart.lo[0] + chart.hi[0])
        for lo, hi in ((chart.lo[0], mid), (mid, chart.hi[0])):
            piece = ChartPatch(param=chart.param, lo=[lo], hi=[hi],
                               weight=chart.weight)
            piece._partition_total = None
            split.append(piece)
    val_split = chart_integrate(P, lambda eta: np.ones(len(eta)), charts=split)
    assert val_split == pytest.approx(val, abs=1e-9 * (1 + abs(val)))


def test_chart_integrate_matches_mc_integral_of_function():
    P = hg.norm_power(2, 2.0)
    g = lambda eta: 1.0 + eta[:, 0] ** 2
    det = chart_integrate(P, g)
    mc = measure.integrate_on_S(P, g, 2 ** 17, seed=7)
    assert abs(det - mc.value) <= 3 * mc.stderr


def test_partition_of_unity_residual_guard():
    P = hg.norm_power(2, 1.0)
    charts = angle_atlas(P)
    charts[0]._partition_total = lambda u: np.full(len(u), 0.9)
    with pytest.raises(ChartError):
        chart_integrate(P, lambda eta: np.ones(len(eta)), charts=charts)


def test_volume_form_ratio_identities():
    assert volume_form_ratio_check(hg.norm_power(2, 1.0)) <= 1e-8
    assert volume_form_ratio_check(hg.norm_power(2, 2.0)) <= 1e-8
    assert volume_form_ratio_check(hg.p1()) <= 1e-8
    assert volume_form_ratio_check(hg.p2()) <= 1e-8


def test_density_nonvanishing_on_builtin_charts():
    for P in (hg.norm_power(2, 1.0), hg.p1(), hg.p2()):
        for chart in angle_atlas(P):
            u = np.linspace(chart.lo[0] + 1e-6, chart.hi[0] - 1e-6, 64)[:, None]
            assert np.min(np.abs(chart_density(P, chart, u))) > 1e-12


def test_riemannian_squeeze_bounds():
    # C1 Vol_S(g) <= integral of g dsigma <= C2 Vol_S(g) with C = 1/|grad P| extrema
    P = hg.p2()
    g = lambda eta: 1.0 + 0.5 * eta[:, 1] ** 2
    grid = hg.sphere_grid(P, 2000, seed=8)
    inv_g = 1.0 / np.linalg.norm(grad(P, grid), axis=1)
    c1, c2 = float(inv_g.min()), float(inv_g.max())
    vol = chart_integrate(P, g, density="riemannian")
    sig = chart_integrate(P, g)
    assert c1 * vol <= sig + 1e-9
    assert sig <= c2 * vol + 1e-9


def test_cube_atlas_d3_sphere_area():
    P = hg.norm_power(3, 2.0)
    val = chart_integrate(P, lambda eta: np.ones(len(eta)), rel_tol=1e-8,
                          max_level=5)
    # mu * m(B) = (3/2)(4 pi/3) = 2 pi
    assert val == pytest.approx(2 * math.pi, abs=1e-6)


def test_cube_atlas_matches_mc_d3():
    P = hg.norm_power(3, 2.0)
    val = chart_integrate(P, lambda eta: eta[:, 2] ** 2, rel_tol=1e-8, max_level=5)
    mc = measure.integrate_on_S(P, lambda eta: eta[:, 2] ** 2, 2 ** 17, seed=9)
    assert abs(val - mc.value) <= 3 * mc.stderr


def test_default_atlas_rejects_high_dim():
    P = hg.norm_power(4, 2.0)
    with pytest.raises(ChartError):
        chart_integrate(P, lambda eta: np.ones(len(eta)))


def test_table_atlas_circle_from_samples():
    P = hg.norm_power(2, 1.0)
    th = np.linspace(0, 2 * math.pi, 160, endpoint=False)
    pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    charts = ss.table_atlas(P, pts)
    val = chart_integrate(P, lambda eta: np.ones(len(eta)), charts=charts)
    assert val == pytest.approx(2 * math.pi, abs=1e-6)


def test_table_atlas_p2_matches_angle_atlas():
    P = hg.p2()
    dirs = hg.direction_grid(2, 400, seed=11)
    charts = ss.table_atlas(P, 1.7 * dirs)
    val = chart_integrate(P, lambda eta: np.ones(len(eta)), charts=charts)
    ref = chart_integrate(P, lambda eta: np.ones(len(eta)))
    assert val == pytest.approx(ref, abs=5e-5)


def test_atlas_from_kind_dispatch():
    assert len(ss.atlas_from_kind(hg.norm_power(2, 1.0), "angle")) == 2
    assert len(ss.atlas_from_kind(hg.norm_power(3, 2.0), "spherical")) == 6
    with pytest.raises(ChartError):
        ss.atlas_from_kind(hg.norm_power(2, 1.0), "nope")
    with pytest.raises(ChartError):
        ss.atlas_from_kind(hg.norm_power(2, 1.0), "table")
