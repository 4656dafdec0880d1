import numpy as np
import pytest

from tale.geodesics import exp_map, geodesic_shoot, speed
from tale.metrics import DomainError, eguchi_hanson, eguchi_hanson_bolt_chart, flat_metric, quotient_annulus, round_sphere_chart
from tale.groups import make_cyclic_subgroup
from tale.volume import (ball_volume, check_monotone, check_zero_sum_bound, exp_jacobian, psi_table,
                         unit_ball_volume)

# Bishop ratio of Eguchi-Hanson (a = 1) at the centre of the bolt, computed
# independently by integrating geodesics on the two-dimensional orbit space
# of the isometry group with Gauss-Legendre quadrature over the initial angle
# (200 nodes, DOP853 at rtol 1e-10).
EH_RADII = [0.05, 0.1, 0.2, 0.5, 1, 2, 5, 10, 20, 50, 100]
EH_PSI = [1.0, 0.999993, 0.999898, 0.996815, 0.969748, 0.835173, 0.639095, 0.568908, 0.534197, 0.513616,
          0.506797]


def test_flat_geodesics_are_lines():
    g = flat_metric(4)
    p, v = np.array([0.1, 0.2, 0.3, 0.4]), np.array([1.0, -2.0, 0.5, 0.0])
    assert np.allclose(exp_map(g, p, v), p + v, atol=1e-12)


def test_sphere_geodesic_speed_is_conserved():
    g = round_sphere_chart(4, 1.0)
    path = geodesic_shoot(g, np.array([0.2, 0.0, 0.1, 0.0]), np.array([0.0, 0.3, 0.0, 0.1]), 3.0)
    s = speed(g, path.points, path.velocities)
    assert np.ptp(s) < 1e-8


def test_geodesic_leaving_the_chart_is_flagged():
    g = eguchi_hanson(1.0)
    path = geodesic_shoot(g, np.array([2.0, 0, 0, 0]), np.array([-1.0, 0, 0, 0]), 5.0)
    assert path.exited
    with pytest.raises(DomainError):
        exp_map(g, np.array([2.0, 0, 0, 0]), np.array([-5.0, 0, 0, 0]))


def test_flat_jacobian_is_t_cubed():
    t = np.array([0.5, 1.0, 2.0])
    J = exp_jacobian(flat_metric(4), np.zeros(4), np.array([1.0, 2.0, 0.0, -1.0]), t)
    assert np.allclose(J, t ** 3, rtol=1e-9)


def test_sphere_jacobian_is_sine_cubed():
    R = 2.0
    t = np.array([0.3, 1.0, 2.5])
    J = exp_jacobian(round_sphere_chart(4, R), np.zeros(4), np.array([0.0, 1.0, 0.0, 0.0]), t)
    assert np.allclose(J, (R * np.sin(t / R)) ** 3, rtol=1e-7)


def test_flat_ball_volume_exact():
    b = ball_volume(flat_metric(4), np.zeros(4), 1.5, samples=64)
    assert b.volume == pytest.approx(unit_ball_volume(4) * 1.5 ** 4, rel=1e-8)


def test_sphere_ball_volume_against_closed_form():
    # vol B(r) on the unit 4-sphere: 2 pi^2 int_0^r sin^3 = 2 pi^2 (2/3 - cos r + cos^3 r / 3)
    r = 1.2
    exact = 2 * np.pi ** 2 * (2 / 3 - np.cos(r) + np.cos(r) ** 3 / 3)
    b = ball_volume(round_sphere_chart(4, 1.0), np.zeros(4), r, samples=64)
    assert b.volume == pytest.approx(exact, rel=1e-6)


def test_flat_quotient_ratio_is_one_half():
    g = quotient_annulus(flat_metric(4), make_cyclic_subgroup(4, 2, (1, 1)))
    t = psi_table(g, np.zeros(4), [0.5, 1.0, 4.0], samples=64)
    assert np.allclose(t.psi, 0.5, atol=1e-8)
    assert all("rigid" in f for f in t.flags)


def test_eguchi_hanson_ratio_against_orbit_space_oracle():
    g = eguchi_hanson_bolt_chart(1.0)
    idx = [3, 5, 7]
    t = psi_table(g, np.zeros(4), [EH_RADII[i] for i in idx], samples=128)
    ref = np.array([EH_PSI[i] for i in idx])
    assert np.all(np.abs(t.psi - ref) <= 4 * t.stderr + 2e-3)
    assert check_monotone(t)["monotone"]


def test_zero_sum_bound():
    assert check_zero_sum_bound([1])["admissible"]
    assert check_zero_sum_bound([2, 2])["admissible"]
    assert not check_zero_sum_bound([1, 2])["admissible"]
    assert not check_zero_sum_bound([1, 1])["admissible"]
    with pytest.raises(ValueError):
        check_zero_sum_bound([0])
