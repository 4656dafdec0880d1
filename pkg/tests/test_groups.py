import numpy as np
import pytest

from tale.groups import (GroupError, acts_freely, enumerate_spin_lifts, from_matrices, make_binary_polyhedral,
                         make_cyclic_subgroup, quaternion_pair_to_so4, so4_to_quaternion_pair, weyl_fixed_subspaces)


def lift_count_oracle(m):
    """Count homomorphic sections of z -> z^2 over the rotations by 2 pi k / m.

    A section is fixed by the image w of the generator: w^2 = exp(2 pi i/m)
    and w^m = 1.  Only the two square roots are candidates.
    """
    gen = np.exp(2j * np.pi / m)
    roots = [np.sqrt(gen), -np.sqrt(gen)]
    return sum(abs(w ** m - 1) < 1e-9 for w in roots)


@pytest.mark.parametrize("m", range(1, 10))
def test_so2_lift_count_matches_oracle(m):
    assert len(enumerate_spin_lifts(make_cyclic_subgroup(2, m))) == lift_count_oracle(m)


def test_even_cyclic_groups_in_so2_never_lift():
    for m in (2, 4, 6, 8):
        assert enumerate_spin_lifts(make_cyclic_subgroup(2, m)) == []


def test_minus_identity_in_so4_has_two_lifts():
    lifts = enumerate_spin_lifts(make_cyclic_subgroup(4, 2, (1, 1)))
    assert len(lifts) == 2
    for L in lifts:
        assert L.projection_error() < 1e-12
        assert L.homomorphism_error() < 1e-12
        assert not L.contains_minus_one()


@pytest.mark.parametrize("kind, k, order", [("dihedral", 2, 8), ("dihedral", 3, 12), ("tetrahedral", None, 24),
                                            ("octahedral", None, 48), ("icosahedral", None, 120)])
def test_binary_polyhedral_orders(kind, k, order):
    G = make_binary_polyhedral(kind, k)
    assert G.order == order
    assert acts_freely(G)


def test_binary_polyhedral_groups_lift():
    # left multiplication by unit quaternions lifts as (q, 1)
    for kind in ("tetrahedral", "octahedral"):
        lifts = enumerate_spin_lifts(make_binary_polyhedral(kind))
        assert len(lifts) >= 1


def test_weyl_fixed_spaces_one_side_vanishes():
    for L in enumerate_spin_lifts(make_cyclic_subgroup(4, 2, (1, 1))):
        dp, dm = weyl_fixed_subspaces(L)
        assert (dp == 0) != (dm == 0)
        assert dp + dm == 2


def test_quaternion_pair_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(20):
        qL, qR = rng.normal(size=4), rng.normal(size=4)
        qL /= np.linalg.norm(qL)
        qR /= np.linalg.norm(qR)
        M = quaternion_pair_to_so4(qL, qR)
        assert np.allclose(M @ M.T, np.eye(4))
        assert np.isclose(np.linalg.det(M), 1.0)
        pL, pR = so4_to_quaternion_pair(M)
        assert np.allclose(quaternion_pair_to_so4(pL, pR), M)


def test_from_matrices_rejects_non_group():
    R = np.diag([1.0, 1.0, -1.0, -1.0])
    S = np.array([[0.0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    with pytest.raises(GroupError):
        from_matrices([np.eye(4), R, S])


def test_reflection_is_rejected():
    with pytest.raises(GroupError):
        from_matrices([np.eye(2), np.diag([1.0, -1.0])])
