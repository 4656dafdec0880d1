import numpy as np
import pytest

from tale.curvature import curvature_arrays, curvature_at
from tale.metrics import (DomainError, conformal_rescale, eguchi_hanson, eguchi_hanson_bolt_chart, flat_metric,
                          power_of_radius, round_sphere_chart)


def _random_points(rng, count, rmin, rmax, n=4):
    y = rng.normal(size=(count, n))
    return y * (rng.uniform(rmin, rmax, size=count) / np.linalg.norm(y, axis=1))[:, None]


def test_flat_metric_has_zero_curvature():
    cb = curvature_at(flat_metric(4), np.array([0.3, -1.0, 2.0, 0.5]))
    assert np.all(cb.riemann == 0)
    assert cb.scalar == 0


@pytest.mark.parametrize("n, R", [(2, 1.0), (3, 2.0), (4, 1.0)])
def test_round_sphere_scalar_and_ricci(n, R):
    g = round_sphere_chart(n, R)
    cb = curvature_at(g, np.full(n, 0.37))
    assert cb.scalar == pytest.approx(n * (n - 1) / R ** 2, rel=1e-8)
    assert np.allclose(cb.ricci, (n - 1) / R ** 2 * cb.metric, atol=1e-8)


def test_curvature_symmetries_on_eguchi_hanson():
    cb = curvature_at(eguchi_hanson(1.0), np.array([1.2, 0.7, -0.4, 0.9]))
    assert max(cb.symmetry_defects().values()) < 1e-10


def test_eguchi_hanson_ricci_flat_but_curved():
    rng = np.random.default_rng(1)
    _, _, R, Ric, s = curvature_arrays(eguchi_hanson(1.0), _random_points(rng, 20, 1.1, 10.0))
    assert np.max(np.abs(Ric)) < 1e-10
    assert np.max(np.abs(R)) > 1e-3


@pytest.mark.parametrize("make", [lambda: eguchi_hanson(1.3), lambda: round_sphere_chart(4, 1.5),
                                  lambda: conformal_rescale(eguchi_hanson(1.0), power_of_radius(-2.0))])
def test_exact_derivatives_match_finite_differences(make):
    g = make()
    y = np.array([1.4, -0.8, 0.6, 1.1])
    assert np.allclose(g.dg(y), g.fd_dg(y), atol=1e-7)
    assert np.allclose(g.d2g(y), g.fd_d2g(y), atol=1e-5)


def test_finite_difference_richardson_order_two():
    g = eguchi_hanson(1.0)
    y = np.array([1.4, -0.8, 0.6, 1.1])
    exact = g.dg(y)
    e1 = np.max(np.abs(g.fd_dg(y, 1e-2) - exact))
    e2 = np.max(np.abs(g.fd_dg(y, 5e-3) - exact))
    assert 3.0 < e1 / e2 < 5.0


def test_eguchi_hanson_outside_bolt_radius_is_rejected():
    with pytest.raises(DomainError):
        eguchi_hanson(1.0).g(np.array([0.5, 0.0, 0.0, 0.0]))


def test_bolt_chart_is_ricci_flat():
    g = eguchi_hanson_bolt_chart(1.0)
    _, _, _, Ric, _ = curvature_arrays(g, np.array([[0.3, 0.2, 0.4, 0.1]]))
    assert np.max(np.abs(Ric)) < 1e-6


def test_conformal_rescale_of_flat_by_inverse_square_is_cylinder_like():
    # |y|^-2 delta is the product metric R x S^3, scalar curvature 6
    g = conformal_rescale(flat_metric(4), power_of_radius(1.0))
    cb = curvature_at(g, np.array([0.4, 0.3, -0.2, 0.9]))
    assert cb.scalar == pytest.approx(6.0, rel=1e-6)
