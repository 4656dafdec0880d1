import numpy as np
import pytest

from tale.conformal import (ALEDescriptor, HypothesisViolated, InsufficientData, _reflection_form, compactify,
                            estimate_ale_order, invert_point, pullback_oracle, pushforward_inverted_metric)
from tale.metrics import eguchi_hanson, flat_metric, synthetic_decay_chart


def fd_pullback(metric_y, z, h=1e-6):
    """|y|^-4 (dy/dz)^T g(y) (dy/dz) with dy/dz by central differences."""
    n = len(z)
    inv = lambda w: w / (w @ w)
    J = np.column_stack([(inv(z + h * e) - inv(z - h * e)) / (2 * h) for e in np.eye(n)])
    y = inv(z)
    return np.linalg.norm(y) ** -4 * J.T @ metric_y(y) @ J


def test_inversion_is_an_involution():
    y = np.array([0.3, -2.0, 1.0, 0.5])
    assert np.allclose(invert_point(invert_point(y)), y)


def test_displayed_formula_matches_numerical_pullback():
    rng = np.random.default_rng(2)
    for _ in range(50):
        z = rng.normal(size=4)
        z *= rng.uniform(0.05, 1.0) / np.linalg.norm(z)
        A = rng.normal(size=(4, 4))
        h = 0.2 * (A + A.T)
        ref = fd_pullback(lambda y: np.eye(4) + h, z)
        assert np.allclose(np.eye(4) + _reflection_form(h, z), ref, atol=1e-6)
        assert np.allclose(pullback_oracle(np.eye(4) + h, z), ref, atol=1e-6)


def test_inverted_eguchi_hanson_chart():
    g = eguchi_hanson(1.0)
    c = pushforward_inverted_metric(g, 2.0)
    z = np.array([0.1, -0.2, 0.05, 0.15])
    assert np.allclose(c.g(z), fd_pullback(g.metric, z), atol=1e-6)
    assert np.allclose(c.dg(z), c.fd_dg(z), atol=1e-6)


def test_decay_order_of_eguchi_hanson():
    d = estimate_ale_order(eguchi_hanson(1.0), np.geomspace(4, 64, 5))
    assert d.tau == pytest.approx(4.0, abs=0.2)
    assert d.mu >= 3


@pytest.mark.parametrize("tau", [1.5, 2.5, 3.0])
def test_decay_order_of_synthetic_ends(tau):
    d = estimate_ale_order(synthetic_decay_chart(4, tau), np.geomspace(4, 64, 5))
    assert d.tau == pytest.approx(tau, abs=0.1)


def test_flat_end_has_infinite_order():
    d = estimate_ale_order(flat_metric(4), np.geomspace(4, 64, 5))
    assert d.tau == np.inf


def test_too_few_radii():
    with pytest.raises(InsufficientData):
        estimate_ale_order(eguchi_hanson(1.0), [4.0, 8.0, 16.0])


def test_descriptor_validation():
    with pytest.raises(ValueError):
        ALEDescriptor(-1.0, 2, 1.0)
    with pytest.raises(ValueError):
        ALEDescriptor(2.0, 2, 0.0)


def test_slow_decay_is_not_compactified():
    g = synthetic_decay_chart(4, 2.5)
    with pytest.raises(HypothesisViolated):
        compactify(g, estimate_ale_order(g, np.geomspace(4, 64, 5)))


def test_compactified_eguchi_hanson_regularity():
    chart, rep = compactify(eguchi_hanson(1.0), ALEDescriptor(4.0, 3, 4.0))
    assert chart.domain.added_point
    assert rep.exponents[0] == pytest.approx(4.0, abs=0.3)
    assert all(rep.bounded[:4])
    assert rep.order == 3


def test_compactified_order_three_end():
    g = synthetic_decay_chart(4, 3.0)
    _, rep = compactify(g, estimate_ale_order(g, np.geomspace(4, 64, 5)))
    assert rep.order == 2
    assert rep.exponents[0] == pytest.approx(3.0, abs=0.3)


def test_flat_compactification_is_smooth():
    _, rep = compactify(flat_metric(4), ALEDescriptor(np.inf, 3, 1.0))
    assert rep.order is None
    assert rep.verdict.startswith("C-infinity")
