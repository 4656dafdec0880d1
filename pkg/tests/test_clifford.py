import numpy as np
import pytest
from scipy.spatial.transform import Rotation
from scipy.stats import ortho_group, special_ortho_group

from tale.clifford import build_clifford, pair_spin_matrix, pin_lift, volume_element
from tale.groups import quaternion_pair_to_so4


@pytest.mark.parametrize("n", [2, 4, 6])
def test_clifford_relations_exact(n):
    rep = build_clifford(n)
    I = np.eye(rep.dim)
    for i in range(n):
        for j in range(n):
            ac = rep.gammas[i] @ rep.gammas[j] + rep.gammas[j] @ rep.gammas[i]
            assert np.array_equal(ac, -2.0 * (i == j) * I)
    assert rep.anticommutation_defect() == 0
    assert rep.chirality_defect() == 0
    assert np.array_equal(rep.chirality @ rep.chirality, I)
    assert np.trace(rep.proj_plus).real == rep.dim // 2


@pytest.mark.parametrize("n", [2, 4, 6])
def test_sigma_is_a_lie_algebra_lift(n):
    rep = build_clifford(n)
    rng = np.random.default_rng(n)
    A = rng.normal(size=(n, n))
    A = A - A.T
    v = rng.normal(size=n)
    S = rep.sigma(A)
    comm = S @ rep.clifford_mult(v) - rep.clifford_mult(v) @ S
    assert np.allclose(comm, rep.clifford_mult(A @ v), atol=1e-12)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_spin_lift_covers_rotation(n):
    rep = build_clifford(n)
    R = special_ortho_group.rvs(n, random_state=5)
    S = rep.spin_lift(R)
    v = np.arange(1.0, n + 1)
    assert np.allclose(S @ rep.clifford_mult(v) @ np.linalg.inv(S), rep.clifford_mult(R @ v), atol=1e-10)
    assert np.allclose(S.conj().T @ S, np.eye(rep.dim), atol=1e-10)
    # spin lifts preserve chirality
    assert np.allclose(S @ rep.chirality, rep.chirality @ S, atol=1e-10)


def test_weyl_basis_splits_quaternion_pairs():
    rep = build_clifford(4)
    rng = np.random.default_rng(0)
    qL, qR = rng.normal(size=4), rng.normal(size=4)
    qL /= np.linalg.norm(qL)
    qR /= np.linalg.norm(qR)
    S = pair_spin_matrix(rep, qL, qR)
    B = rep.weyl_basis
    D = B.conj().T @ S @ B
    assert np.allclose(D[:2, 2:], 0, atol=1e-10) and np.allclose(D[2:, :2], 0, atol=1e-10)
    # the (q, 1) action is trivial on Sigma-, the (1, q) action on Sigma+
    T = B.conj().T @ pair_spin_matrix(rep, qL, np.array([1.0, 0, 0, 0])) @ B
    assert np.allclose(T[2:, 2:], np.eye(2), atol=1e-10)
    M = quaternion_pair_to_so4(qL, qR)
    v = rng.normal(size=4)
    assert np.allclose(S @ rep.clifford_mult(v) @ S.conj().T, rep.clifford_mult(M @ v), atol=1e-10)


def test_minus_one_pairs():
    rep = build_clifford(4)
    one, minus = np.array([1.0, 0, 0, 0]), np.array([-1.0, 0, 0, 0])
    assert np.allclose(pair_spin_matrix(rep, minus, minus), -np.eye(4), atol=1e-10)
    P = rep.weyl_basis.conj().T @ pair_spin_matrix(rep, one, minus) @ rep.weyl_basis
    assert np.allclose(np.diag(P), [1, 1, -1, -1], atol=1e-10)


@pytest.mark.parametrize("n", [2, 4])
def test_pin_lift_of_orientation_reversing_maps(n):
    rep = build_clifford(n)
    Q = ortho_group.rvs(n, random_state=2)
    if np.linalg.det(Q) > 0:
        Q[:, 0] *= -1
    S = pin_lift(rep, Q)
    v = np.linspace(-1, 1, n)
    assert np.allclose(S @ rep.clifford_mult(v) @ np.linalg.inv(S), rep.clifford_mult(Q @ v), atol=1e-10)


def test_volume_element_reverses_vectors():
    rep = build_clifford(4)
    vol = volume_element(rep)
    v = np.array([0.3, -1.0, 2.0, 0.1])
    assert np.allclose(vol @ rep.clifford_mult(v) @ np.linalg.inv(vol), -rep.clifford_mult(v))


def test_spin_lift_spectrum_agrees_with_scipy_rotation():
    # a rotation by theta fixing e_4 and its axis lifts with eigenvalues exp(+-i theta/2)
    rep = build_clifford(4)
    rot = Rotation.from_rotvec([0.3, -0.2, 0.5])
    R = np.eye(4)
    R[:3, :3] = rot.as_matrix()
    phases = np.abs(np.angle(np.linalg.eigvals(rep.spin_lift(R))))
    assert np.allclose(phases, np.linalg.norm(rot.as_rotvec()) / 2, atol=1e-10)
