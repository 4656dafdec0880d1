"""Complex Clifford representations in even dimensions up to 6.

Convention: ``X . Y + Y . X = -2 <X, Y>``.  The generators are
``gamma_k = i Gamma_k`` with Hermitian Jordan-Wigner matrices ``Gamma_k``
built from Pauli matrices, so every entry lies in ``{0, +-1, +-i}`` and all
identities hold exactly in floating point.  The spinor inner product is
the standard Hermitian one; each ``gamma_k`` is unitary and
anti-Hermitian.

The infinitesimal spin representation of a skew matrix ``A`` is
``sigma(A) = -1/4 sum_ab A_ab gamma_a gamma_b``; it satisfies
``[sigma(A), gamma(v)] = gamma(A v)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product

import numpy as np
from scipy.linalg import expm, logm

from .groups import UnsupportedDimension, qmul, su2_matrix

_I2 = np.eye(2, dtype=complex)
_S1 = np.array([[0, 1], [1, 0]], dtype=complex)
_S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_S3 = np.array([[1, 0], [0, -1]], dtype=complex)


def _kron_all(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


@dataclass(frozen=True)
class CliffordRep:
    """Gamma matrices of ``Cl(n)`` acting on ``Sigma = C^(2^(n/2))``.

    Attributes
    ----------
    n : int
    gammas : ndarray (n, N, N)
    chirality : ndarray (N, N)
        Squares to the identity and anticommutes with every generator.
    proj_plus, proj_minus : ndarray (N, N)
        Projectors onto the half-spinor spaces.
    weyl_basis : ndarray (N, N) or None
        For ``n = 4``: a unitary whose columns are a basis of
        ``Sigma+ (+) Sigma-`` in which the spin lift of a quaternion pair
        ``(qL, qR)`` is ``diag(su2(qL), su2(qR))``.
    """

    n: int
    gammas: np.ndarray
    chirality: np.ndarray
    proj_plus: np.ndarray
    proj_minus: np.ndarray
    weyl_basis: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.gammas.shape[-1]

    def clifford_mult(self, X) -> np.ndarray:
        """Matrix of Clifford multiplication by ``X`` (orthonormal components, batched)."""
        return np.tensordot(np.asarray(X), self.gammas, axes=(-1, 0))

    @cached_property
    def _bivectors(self) -> np.ndarray:
        """``-1/4 gamma_a gamma_b`` as an array ``[a, b, i, j]``."""
        return -0.25 * np.einsum("aij,bjk->abik", self.gammas, self.gammas)

    def sigma(self, A) -> np.ndarray:
        """Spin representation of skew matrices ``A[..., a, b]``."""
        return np.tensordot(np.asarray(A), self._bivectors, axes=([-2, -1], [0, 1]))

    def spin_lift(self, R) -> np.ndarray:
        """A spinor lift of ``R`` in SO(n) close to ``I`` (principal logarithm)."""
        A = np.real(logm(np.asarray(R, float)))
        A = 0.5 * (A - A.T)
        return expm(self.sigma(A))

    def anticommutation_defect(self) -> float:
        g = self.gammas
        N = self.dim
        worst = 0.0
        for i in range(self.n):
            for j in range(self.n):
                target = -2.0 * (i == j) * np.eye(N)
                worst = max(worst, float(np.max(np.abs(g[i] @ g[j] + g[j] @ g[i] - target))))
        return worst

    def chirality_defect(self) -> float:
        w = self.chirality
        worst = float(np.max(np.abs(w @ w - np.eye(self.dim))))
        for g in self.gammas:
            worst = max(worst, float(np.max(np.abs(w @ g + g @ w))))
        return worst


def _quaternion_rotation_generator(aL, aR) -> np.ndarray:
    """Matrix of ``x -> aL x - x aR`` on R^4 = H."""
    cols = [qmul(aL, e) - qmul(e, aR) for e in np.eye(4)]
    return np.array(cols).T


def _quaternion_log(q) -> np.ndarray:
    """Principal logarithm of a unit quaternion (pure imaginary, angle in [0, pi])."""
    q = np.asarray(q, float)
    v = q[1:]
    s = np.linalg.norm(v)
    ang = np.arctan2(s, q[0])
    if s < 1e-15:
        if q[0] > 0:
            return np.zeros(4)
        return np.array([0.0, np.pi, 0.0, 0.0])
    return np.concatenate([[0.0], ang * v / s])


def pair_spin_matrix(rep: CliffordRep, qL, qR) -> np.ndarray:
    """Action of the Spin(4) element ``(qL, qR)`` on ``Sigma``.

    Obtained by exponentiating along the one-parameter subgroup through
    ``(qL, qR)``, so the result is the lift determined by the pair (not
    only up to sign).
    """
    A = _quaternion_rotation_generator(_quaternion_log(qL), _quaternion_log(qR))
    return expm(rep.sigma(A))


def _q8_pairs():
    units = [np.array(v, float) for v in np.vstack([np.eye(4), -np.eye(4)])]
    return list(product(units, units))


def _weyl_intertwiner(rep: CliffordRep, seed: int = 7) -> np.ndarray:
    """Columns: orthonormal bases of ``Sigma+`` then ``Sigma-`` matching the quaternion model.

    Schur averaging of a random matrix over the quaternion group pairs
    ``Q8 x Q8`` gives an intertwiner ``T`` with
    ``T S(qL, qR) = diag(su2(qL), su2(qR)) T``; each 2x2 block is then a
    multiple of a unitary and is normalised separately.
    """
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    T = np.zeros((4, 4), dtype=complex)
    for qL, qR in _q8_pairs():
        D = np.zeros((4, 4), dtype=complex)
        D[:2, :2] = su2_matrix(qL)
        D[2:, 2:] = su2_matrix(qR)
        S = pair_spin_matrix(rep, qL, qR)
        T += D @ M @ np.linalg.inv(S)
    for rows in (slice(0, 2), slice(2, 4)):
        block = T[rows]
        T[rows] = block / np.sqrt(np.real(np.trace(block @ block.conj().T)) / 2)
    return T.conj().T      # columns span Sigma+ (first two) and Sigma- (last two)


@lru_cache(maxsize=None)
def build_clifford(n: int) -> CliffordRep:
    """Clifford representation in even dimension ``2 <= n <= 6``.

    For ``n = 4`` the chirality sign is fixed so that ``Sigma+`` carries the
    left quaternion factor of Spin(4) = Sp(1) x Sp(1), and an explicit
    intertwiner with the quaternion model is attached.
    """
    if n % 2 or not 2 <= n <= 6:
        raise UnsupportedDimension(f"Clifford representation needs even n in [2, 6], got {n}")
    m = n // 2
    gam = []
    for k in range(m):
        left = [_S3] * k
        right = [_I2] * (m - k - 1)
        gam.append(1j * _kron_all(left + [_S1] + right))
        gam.append(1j * _kron_all(left + [_S2] + right))
    gam = np.array(gam)
    vol = np.eye(2 ** m, dtype=complex)
    for g in gam:
        vol = vol @ g
    # (gamma_1...gamma_n)^2 = (-1)^m; a power of i makes it an involution
    w = vol if m % 2 == 0 else 1j * vol
    w = np.round(w.real) + 1j * np.round(w.imag)
    rep = CliffordRep(n, gam, w, 0.5 * (np.eye(2 ** m) + w), 0.5 * (np.eye(2 ** m) - w))
    if n == 4:
        T = _weyl_intertwiner(rep)
        # choose the orientation sign so that the left factor acts on the +1 eigenspace
        plus_part = np.linalg.norm(rep.proj_plus @ T[:, :2])
        if plus_part < 1.0:
            w = -w
            rep = CliffordRep(n, gam, w, 0.5 * (np.eye(4) + w), 0.5 * (np.eye(4) - w))
        rep = CliffordRep(rep.n, rep.gammas, rep.chirality, rep.proj_plus, rep.proj_minus, T)
    return rep


def volume_element(rep: CliffordRep) -> np.ndarray:
    """``gamma_1 ... gamma_n``; conjugation by it is ``-I`` on vectors (n even)."""
    out = np.eye(rep.dim, dtype=complex)
    for g in rep.gammas:
        out = out @ g
    return out


def pin_lift(rep: CliffordRep, Q, w=None) -> np.ndarray:
    """A unitary ``S`` with ``S gamma(v) S^-1 = gamma(Q v)`` for ``Q`` in O(n).

    For ``det Q = -1`` the element is ``gamma(w) vol S0``: with ``R_w`` the
    reflection in the hyperplane orthogonal to the unit vector ``w``,
    ``S0`` lifts the rotation ``R_w Q`` near the identity.  Passing ``w``
    (e.g. a direction varying smoothly with a base point) makes the lift
    depend continuously on it; by default ``w`` is an eigenvector of ``Q``
    for the eigenvalue ``-1``.
    """
    Q = np.asarray(Q, float)
    if np.linalg.det(Q) > 0:
        return rep.spin_lift(Q)
    if w is None:
        vals, vecs = np.linalg.eig(Q)
        w = np.real(vecs[:, int(np.argmin(np.abs(vals + 1)))])
    w = np.asarray(w, float) / np.linalg.norm(w)
    Rw = np.eye(rep.n) - 2 * np.outer(w, w)
    return rep.clifford_mult(w) @ volume_element(rep) @ rep.spin_lift(Rw @ Q)
