import numpy as np
import pytest

from tale.clifford import build_clifford
from tale.metrics import DomainError, eguchi_hanson, flat_metric, round_sphere_chart
from tale.spinors import (FrameField, NonExtendable, TrivialField, conformal_twistor_transport,
                          covariant_derivatives, deck_spinor, extend_to_puncture, fixed_space, flat_twistor_field,
                          growth_exponent, holonomy, integrate_parallel_section, parallel_spinor_on_EH, polyline,
                          rectangle_loop, segment, twistor_residual, twistor_zero_locus)

rng = np.random.default_rng(12)


def random_spinor(N=4):
    return rng.normal(size=N) + 1j * rng.normal(size=N)


def sphere_conformal_factor(R):
    # the stereographic round metric is u^2 delta with u = 2 R^2 / (R^2 + |y|^2)
    return lambda y: 2 * R ** 2 / (R ** 2 + np.sum(np.asarray(y) ** 2, axis=-1))


def test_flat_closed_form_is_a_twistor_spinor():
    g = flat_metric(4)
    f = flat_twistor_field(random_spinor(), random_spinor())
    for _ in range(10):
        r = twistor_residual(g, FrameField(g), f, rng.normal(size=4), rng.normal(size=4))
        assert np.max(np.abs(r)) < 1e-9


def test_dirac_of_flat_field_is_psi0():
    g = flat_metric(4)
    psi0 = random_spinor()
    f = flat_twistor_field(random_spinor(), psi0)
    _, _, D = covariant_derivatives(g, FrameField(g), f, np.array([0.3, 0.1, -0.7, 1.0]))
    assert np.allclose(D, psi0, atol=1e-9)


def test_twistor_spinor_on_the_sphere_by_conformal_change():
    g = round_sphere_chart(4, 1.5)
    f = conformal_twistor_transport(flat_twistor_field(random_spinor(), random_spinor()), sphere_conformal_factor(1.5))
    F = FrameField(g)
    for _ in range(5):
        r = twistor_residual(g, F, f, rng.normal(size=4), rng.normal(size=4))
        assert np.max(np.abs(r)) < 1e-6


def test_weight_zero_is_not_a_twistor_spinor_on_the_sphere():
    # negative control: without the u^(1/2) weight the equation fails
    g = round_sphere_chart(4, 1.0)
    f = flat_twistor_field(random_spinor(), random_spinor())
    r = twistor_residual(g, FrameField(g), f, np.array([0.5, 0.2, -0.3, 0.4]), np.array([1.0, 0, 0, 0]))
    assert np.max(np.abs(r)) > 1e-3


def test_residual_is_gauge_covariant():
    g = round_sphere_chart(4, 1.0)
    f = conformal_twistor_transport(flat_twistor_field(random_spinor(), random_spinor()), sphere_conformal_factor(1.0))

    def gauge(y):
        A = np.zeros((4, 4))
        A[0, 1], A[2, 3] = np.sin(y[0] + y[2]), 0.5 * y[1] * y[3]
        return A - A.T

    F = FrameField(g, gauge=gauge)
    fg = lambda Y: np.array([np.linalg.solve(F.spinor_gauge(y), v)
                             for y, v in zip(np.atleast_2d(Y), np.atleast_2d(f(Y)))]).reshape(np.shape(f(Y)))
    p = np.array([0.2, -0.4, 0.1, 0.3])
    r = twistor_residual(g, F, fg, p, np.array([0.3, 1.0, -0.5, 0.2]))
    assert np.max(np.abs(r)) < 1e-6


def test_conformally_flat_twistor_holonomy_is_trivial():
    g = round_sphere_chart(4, 1.0)
    H = holonomy(g, rectangle_loop(np.array([0.3, 0.2, -0.1, 0.4]), 0, 3, 0.6), kind="twistor")
    assert np.allclose(H, np.eye(8), atol=1e-8)


def test_spin_holonomy_on_sphere_is_nontrivial_and_unitary():
    g = round_sphere_chart(4, 1.0)
    H = holonomy(g, rectangle_loop(np.array([0.3, 0.2, -0.1, 0.4]), 0, 1, 0.6))
    assert np.allclose(H.conj().T @ H, np.eye(4), atol=1e-9)
    assert np.max(np.abs(H - np.eye(4))) > 1e-2


def test_transport_flags_exit_and_rejects_outside_start():
    g = eguchi_hanson(1.0)
    res = integrate_parallel_section(g, segment(np.array([1.5, 0, 0, 0]), np.array([0.2, 0, 0, 0])),
                                     np.ones(8, complex))
    assert res.exited and 0 < res.t_end < 1
    with pytest.raises(DomainError):
        integrate_parallel_section(g, segment(np.array([0.5, 0, 0, 0]), np.array([3.0, 0, 0, 0])),
                                   np.ones(8, complex))


def test_flat_transport_matches_closed_form():
    g = flat_metric(4)
    phi0, psi0 = random_spinor(), random_spinor()
    f = flat_twistor_field(phi0, psi0)
    pts = np.array([[0.0, 0, 0, 0], [1.0, 0.5, 0, 0], [1.0, -0.5, 2.0, 0.3]])
    res = integrate_parallel_section(g, polyline(pts), np.concatenate([phi0, psi0]))
    assert np.allclose(res.state[:4], f(pts[-1]), atol=1e-9)
    assert np.allclose(res.state[4:], psi0, atol=1e-9)


def test_single_zero_and_linear_growth():
    rep = build_clifford(4)
    psi0 = random_spinor()
    x0 = np.array([0.4, -0.3, 1.1, 0.2])
    f = flat_twistor_field(rep.clifford_mult(x0) @ psi0 / 4, psi0)
    zeros = twistor_zero_locus(f, (-2.0, 2.0), 4, seeds_per_axis=6)
    assert len(zeros) == 1
    assert np.allclose(zeros[0].point, x0, atol=1e-8)
    assert zeros[0].isolated
    assert growth_exponent(f, zeros[0].point) == pytest.approx(1.0, abs=0.05)


def test_no_zero_when_zero_lies_outside_box():
    rep = build_clifford(4)
    psi0 = random_spinor()
    f = flat_twistor_field(rep.clifford_mult(np.array([5.0, 0, 0, 0])) @ psi0 / 4, psi0)
    assert twistor_zero_locus(f, (-2.0, 2.0), 4, seeds_per_axis=4) == []


def test_trivial_field_rejected():
    with pytest.raises(TrivialField):
        twistor_zero_locus(flat_twistor_field(np.zeros(4), np.zeros(4)), (-1.0, 1.0), 4, seeds_per_axis=3)


def test_extension_to_a_puncture():
    g = flat_metric(4)
    phi0, psi0 = random_spinor(), random_spinor()
    f = flat_twistor_field(phi0, psi0)
    c = np.array([0.5, 0.2, 0.0, -0.3])
    ext = extend_to_puncture(g, lambda x: np.concatenate([f(x), psi0]), c, 0.25)
    assert ext.certified
    assert np.allclose(ext.phi, f(c), atol=1e-8)


def test_extension_rejects_path_dependent_data():
    # negative control: 1% direction-dependent noise is not a parallel section
    g = flat_metric(4)
    phi0, psi0 = random_spinor(), random_spinor()
    f = flat_twistor_field(phi0, psi0)
    c = np.zeros(4)
    noise = lambda x: 0.01 * np.linalg.norm(phi0) * np.sin(7 * x[0] + 3 * x[1]) * np.ones(4)
    with pytest.raises(NonExtendable):
        extend_to_puncture(g, lambda x: np.concatenate([f(x) + noise(x), psi0]), c, 0.25)


def test_fixed_space_of_commuting_rotations():
    D = np.diag([1.0, 1.0, 1j, -1j])
    P = np.diag([1.0, 1.0, -1.0, -1.0])
    B, s = fixed_space([D, P])
    assert B.shape == (4, 2)
    assert np.allclose(B[2:], 0)


def test_eguchi_hanson_parallel_spinors():
    g = eguchi_hanson(1.0)
    P = parallel_spinor_on_EH(g)
    assert P.dimension == 2
    assert P.chirality == "+"
    assert max(P.loop_residuals) < 1e-6
    # the deck transformation -I lifts to (1, -1), which fixes Sigma+
    S = deck_spinor(P.field.frame.rep, [1.0, 0, 0, 0], [-1.0, 0, 0, 0])
    assert np.allclose(S @ P.basis, P.basis, atol=1e-9)
    y = np.array([2.0, -1.0, 0.5, 0.8])
    _, nab, _ = covariant_derivatives(g, P.field.frame, P.field.column(0), y)
    assert np.max(np.abs(nab)) < 1e-5
