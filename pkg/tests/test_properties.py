import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from tale.clifford import build_clifford, pair_spin_matrix
from tale.conformal import _reflection_form, pullback_oracle
from tale.groups import enumerate_spin_lifts, make_cyclic_subgroup, quaternion_pair_to_so4
from tale.volume import check_zero_sum_bound

finite = st.floats(-2.0, 2.0, allow_nan=False)
vec4 = st.lists(finite, min_size=4, max_size=4).map(np.array)


@given(st.integers(1, 24))
@settings(deadline=None, max_examples=24)
def test_so2_lift_exists_iff_order_is_odd(m):
    assert (len(enumerate_spin_lifts(make_cyclic_subgroup(2, m))) > 0) == (m % 2 == 1)


@given(vec4, vec4)
@settings(deadline=None, max_examples=50)
def test_pair_spin_matrix_covers_so4(a, b):
    if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
        return
    qL, qR = a / np.linalg.norm(a), b / np.linalg.norm(b)
    rep = build_clifford(4)
    S = pair_spin_matrix(rep, qL, qR)
    M = quaternion_pair_to_so4(qL, qR)
    v = np.array([0.3, -1.0, 0.7, 0.2])
    assert np.allclose(S @ rep.clifford_mult(v) @ S.conj().T, rep.clifford_mult(M @ v), atol=1e-9)


@given(vec4, st.lists(finite, min_size=10, max_size=10))
@settings(deadline=None, max_examples=50)
def test_reflection_form_equals_pullback(z, entries):
    if np.linalg.norm(z) < 1e-2:
        return
    h = np.zeros((4, 4))
    h[np.triu_indices(4)] = 0.2 * np.array(entries)
    h = h + np.triu(h, 1).T
    assert np.allclose(np.eye(4) + _reflection_form(h, z), pullback_oracle(np.eye(4) + h, z), atol=1e-10)


@given(st.lists(st.integers(1, 12), min_size=1, max_size=6))
def test_smooth_zero_admissible_only_alone(orders):
    adm = check_zero_sum_bound(orders)["admissible"]
    if 1 in orders:
        assert adm == (len(orders) == 1)
    assert adm == (sum(1 / o for o in orders) <= 1 + 1e-12)
