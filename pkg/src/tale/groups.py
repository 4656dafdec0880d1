"""Finite rotation groups and their lifts to Spin(2) and Spin(4).

Spin(4) is modelled as pairs of unit quaternions ``(qL, qR)`` acting on
``H = R^4`` by ``x -> qL * x * conj(qR)``; Spin(2) is modelled as an angle
``theta`` projecting to the rotation by ``2 * theta``.  Both presentations
are exact double covers, so lifts can be enumerated by brute force over
sign choices without any matrix exponentials.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

MATRIX_TOL = 1e-10
KEY_DECIMALS = 12


class GroupError(ValueError):
    """Raised for invalid group input (bad order, non-closed set, ...)."""


class UnsupportedDimension(GroupError):
    """Raised when an operation is requested in a dimension it does not cover."""


# ---------------------------------------------------------------------------
# quaternions


@dataclass(frozen=True)
class UnitQuaternion:
    """Unit quaternion ``w + x i + y j + z k``.

    Products are renormalized so the unit-norm invariant survives long
    chains of multiplications.
    """

    w: float
    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, q) -> "UnitQuaternion":
        q = np.asarray(q, dtype=float)
        nrm = np.linalg.norm(q)
        if nrm == 0:
            raise GroupError("zero quaternion has no unit normalization")
        q = q / nrm
        return cls(float(q[0]), float(q[1]), float(q[2]), float(q[3]))

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __mul__(self, other: "UnitQuaternion") -> "UnitQuaternion":
        return UnitQuaternion.from_array(qmul(self.as_array(), other.as_array()))

    def __neg__(self) -> "UnitQuaternion":
        return UnitQuaternion(-self.w, -self.x, -self.y, -self.z)

    def conjugate(self) -> "UnitQuaternion":
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def key(self) -> tuple:
        return _round_key(self.as_array())


def qmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product of quaternion arrays ``[w, x, y, z]``."""
    w1, x1, y1, z1 = p
    w2, x2, y2, z2 = q
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def qconj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def su2_matrix(q) -> np.ndarray:
    """The 2x2 unitary matrix of left multiplication by ``q`` on ``H = C^2``.

    Writing ``q = a + b j`` with ``a, b`` complex, the matrix is
    ``[[a, -b], [conj(b), conj(a)]]``; this is a faithful homomorphism
    ``Sp(1) -> SU(2)``.
    """
    q = q.as_array() if isinstance(q, UnitQuaternion) else np.asarray(q, float)
    a = q[0] + 1j * q[1]
    b = q[2] + 1j * q[3]
    return np.array([[a, -b], [np.conj(b), np.conj(a)]])


def _round_key(arr) -> tuple:
    # adding 0.0 folds -0.0 into 0.0 so both signs of zero hash alike
    return tuple(np.round(np.asarray(arr, float).ravel(), KEY_DECIMALS) + 0.0)


def quaternion_pair_to_so4(qL, qR) -> np.ndarray:
    """Matrix of ``x -> qL x conj(qR)`` in the basis ``1, i, j, k``."""
    qL = qL.as_array() if isinstance(qL, UnitQuaternion) else np.asarray(qL, float)
    qR = qR.as_array() if isinstance(qR, UnitQuaternion) else np.asarray(qR, float)
    cR = qconj(qR)
    cols = [qmul(qmul(qL, e), cR) for e in np.eye(4)]
    return np.column_stack(cols)


def so4_to_quaternion_pair(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One of the two preimages ``(qL, qR)`` of ``M`` in Sp(1) x Sp(1).

    ``M(u) conj(M(1)) = qL u conj(qL)`` recovers the SO(3) rotation of
    ``qL``; then ``qR = conj(M(1)) qL``.
    """
    M = np.asarray(M, float)
    m1 = M[:, 0]
    cm1 = qconj(m1)
    rot = np.empty((3, 3))
    for col, e in enumerate(np.eye(4)[1:]):
        rot[:, col] = qmul(M @ e, cm1)[1:]
    xyzw = Rotation.from_matrix(rot).as_quat()
    qL = np.array([xyzw[3], xyzw[0], xyzw[1], xyzw[2]])
    qR = qmul(cm1, qL)
    qR /= np.linalg.norm(qR)
    if not np.allclose(quaternion_pair_to_so4(qL, qR), M, atol=1e-9):
        raise GroupError("matrix is not in SO(4)")
    return qL, qR


def so2_angle(M: np.ndarray) -> float:
    return float(np.arctan2(M[1, 0], M[0, 0]))


def rotation2(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


# ---------------------------------------------------------------------------
# finite rotation groups


@dataclass(frozen=True)
class FiniteRotationGroup:
    """A finite subgroup of SO(n), stored as matrices plus a Cayley table.

    Attributes
    ----------
    n : int
        Dimension of the ambient space (2, 3 or 4).
    elements : tuple of ndarray
        The group elements; ``elements[0]`` is the identity.
    table : ndarray
        ``table[a, b]`` is the index of ``elements[a] @ elements[b]``.
    quaternions : tuple or None
        For ``n = 4``, one preimage ``(qL, qR)`` per element.
    name : str
        Human-readable label.
    """

    n: int
    elements: tuple
    table: np.ndarray = field(repr=False)
    quaternions: tuple | None = field(default=None, repr=False)
    name: str = "group"

    @property
    def order(self) -> int:
        return len(self.elements)

    def is_trivial(self) -> bool:
        return self.order == 1

    def index_of(self, M: np.ndarray) -> int:
        for idx, E in enumerate(self.elements):
            if np.max(np.abs(E - M)) < MATRIX_TOL:
                return idx
        raise GroupError("matrix is not an element of the group")

    def conjugate_by(self, R: np.ndarray) -> "FiniteRotationGroup":
        """The group ``R G R^-1`` (same Cayley table)."""
        return from_matrices([R @ E @ R.T for E in self.elements], name=f"conj({self.name})")

    @classmethod
    def from_generators(cls, gens, name: str = "group") -> "FiniteRotationGroup":
        return from_generators(gens, name=name)


def _matrix_key(M: np.ndarray) -> tuple:
    return _round_key(M)


def _close(gens: list[np.ndarray], max_order: int = 10_000) -> list[np.ndarray]:
    n = gens[0].shape[0]
    elems = [np.eye(n)]
    keys = {_matrix_key(elems[0]): 0}
    frontier = [elems[0]]
    while frontier:
        nxt = []
        for A in frontier:
            for G in gens:
                P = A @ G
                k = _matrix_key(P)
                if k not in keys:
                    keys[k] = len(elems)
                    elems.append(P)
                    nxt.append(P)
                    if len(elems) > max_order:
                        raise GroupError("generators do not close to a finite group")
        frontier = nxt
    return elems


def _check_special_orthogonal(M: np.ndarray) -> None:
    n = M.shape[0]
    if M.shape != (n, n) or n not in (2, 3, 4):
        raise UnsupportedDimension(f"matrices must be n x n with n in (2, 3, 4), got {M.shape}")
    if np.max(np.abs(M.T @ M - np.eye(n))) > 1e-9:
        raise GroupError("matrix is not orthogonal")
    if np.linalg.det(M) < 0:
        raise GroupError("matrix has determinant -1; groups must lie in SO(n)")


def _cayley(elems: list[np.ndarray]) -> np.ndarray:
    keys = {_matrix_key(E): i for i, E in enumerate(elems)}
    m = len(elems)
    table = np.empty((m, m), dtype=int)
    for a, A in enumerate(elems):
        for b, B in enumerate(elems):
            P = A @ B
            idx = keys.get(_matrix_key(P))
            if idx is None:
                # fall back to tolerance match before declaring non-closure
                hits = [i for i, E in enumerate(elems) if np.max(np.abs(E - P)) < MATRIX_TOL]
                if not hits:
                    raise GroupError("element set is not closed under multiplication")
                idx = hits[0]
            table[a, b] = idx
    return table


def from_matrices(mats, name: str = "group") -> FiniteRotationGroup:
    """Build a group from an explicit list of matrices (closure is checked)."""
    mats = [np.asarray(M, float) for M in mats]
    if not mats:
        raise GroupError("empty element list")
    for M in mats:
        _check_special_orthogonal(M)
    n = mats[0].shape[0]
    # put the identity first and drop duplicates
    uniq, seen = [np.eye(n)], {_matrix_key(np.eye(n))}
    for M in mats:
        k = _matrix_key(M)
        if k not in seen:
            seen.add(k)
            uniq.append(M)
    table = _cayley(uniq)
    quats = None
    if n == 4:
        quats = tuple(so4_to_quaternion_pair(M) for M in uniq)
    return FiniteRotationGroup(n, tuple(uniq), table, quats, name)


def from_generators(gens, name: str = "group") -> FiniteRotationGroup:
    gens = [np.asarray(G, float) for G in gens]
    for G in gens:
        _check_special_orthogonal(G)
    return from_matrices(_close(gens), name=name)


def make_cyclic_subgroup(n: int, m: int, embedding=(1, 1)) -> FiniteRotationGroup:
    """Cyclic group of order ``m`` in SO(2) or SO(4).

    Parameters
    ----------
    n : int
        2 or 4.
    m : int
        Order of the group, ``m >= 1``.
    embedding : (int, int)
        For ``n = 4``, the generator rotates the planes ``(x1, x2)`` and
        ``(x3, x4)`` by ``k1 * 2 pi / m`` and ``k2 * 2 pi / m``.  Ignored for
        ``n = 2``.  Angles may also be passed as floats in radians, in
        which case they must be multiples of ``2 pi / m``.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise GroupError(f"invalid order m = {m!r}")
    if n == 2:
        gen = rotation2(2 * np.pi / m)
        return from_generators([gen], name=f"cyclic:{m}")
    if n != 4:
        raise UnsupportedDimension("cyclic subgroups are built for n = 2 or n = 4")
    k1, k2 = embedding
    thetas = []
    for k in (k1, k2):
        if isinstance(k, (int, np.integer)):
            thetas.append(2 * np.pi * int(k) / m)
        else:
            ratio = float(k) * m / (2 * np.pi)
            if abs(ratio - round(ratio)) > 1e-9:
                raise GroupError("embedding angles must be multiples of 2*pi/m")
            thetas.append(float(k))
    gen = np.zeros((4, 4))
    gen[:2, :2] = rotation2(thetas[0])
    gen[2:, 2:] = rotation2(thetas[1])
    G = from_generators([gen], name=f"cyclic:{m}:{k1},{k2}")
    if G.order != m:
        raise GroupError(f"embedding ({k1},{k2}) generates a group of order {G.order}, not {m}")
    return G


PHI = (1 + 5 ** 0.5) / 2


def _binary_generators(kind: str, k: int | None = None) -> list[np.ndarray]:
    h = 0.5
    if kind == "dihedral":
        if k is None or k < 2:
            raise GroupError("binary dihedral group needs k >= 2")
        return [np.array([np.cos(np.pi / k), np.sin(np.pi / k), 0, 0]), np.array([0, 0, 1.0, 0])]
    if kind == "tetrahedral":
        return [np.array([0, 1.0, 0, 0]), np.array([0, 0, 1.0, 0]), np.array([h, h, h, h])]
    if kind == "octahedral":
        s = 2 ** -0.5
        return [np.array([0, 1.0, 0, 0]), np.array([0, 0, 1.0, 0]), np.array([h, h, h, h]),
                np.array([s, s, 0, 0])]
    if kind == "icosahedral":
        return [np.array([0, 1.0, 0, 0]), np.array([h, h, h, h]),
                np.array([PHI / 2, 1 / (2 * PHI), h, 0])]
    raise GroupError(f"unknown binary polyhedral type {kind!r}")


def make_binary_polyhedral(kind: str, k: int | None = None) -> FiniteRotationGroup:
    """Binary polyhedral group acting on ``H = C^2`` by left multiplication.

    Parameters
    ----------
    kind : {"dihedral", "tetrahedral", "octahedral", "icosahedral"}
    k : int, optional
        Parameter of the binary dihedral group (order ``4k``).
    """
    gens = [quaternion_pair_to_so4(q, np.array([1.0, 0, 0, 0])) for q in _binary_generators(kind, k)]
    label = f"binary-{kind}" + (f":{k}" if kind == "dihedral" else "")
    return from_generators(gens, name=label)


def acts_freely(G: FiniteRotationGroup) -> bool:
    """True iff no non-identity element fixes a nonzero vector."""
    for E in G.elements[1:]:
        ev = np.linalg.eigvals(E)
        if np.any(np.abs(ev - 1.0) < MATRIX_TOL ** 0.5):
            # eigenvalue 1 up to the conditioning of the eigen-solver; confirm
            # with a null-space computation at the contract tolerance
            s = np.linalg.svd(E - np.eye(G.n), compute_uv=False)
            if s[-1] < 1e-8:
                return False
    return True


# ---------------------------------------------------------------------------
# spin lifts


def _spin_mul(n: int, a, b):
    if n == 2:
        return (a + b) % (2 * np.pi)
    return (qmul(a[0], b[0]), qmul(a[1], b[1]))


def _spin_key(n: int, a) -> tuple:
    if n == 2:
        t = round(float(a) % (2 * np.pi), KEY_DECIMALS)
        if abs(t - round(2 * np.pi, KEY_DECIMALS)) < 10 ** -KEY_DECIMALS:
            t = 0.0
        return (t + 0.0,)
    # normalize before keying to avoid drift in long products
    qL = a[0] / np.linalg.norm(a[0])
    qR = a[1] / np.linalg.norm(a[1])
    return _round_key(np.concatenate([qL, qR]))


def _spin_identity(n: int):
    if n == 2:
        return 0.0
    one = np.array([1.0, 0, 0, 0])
    return (one, one.copy())


def _spin_neg(n: int, a):
    if n == 2:
        return (a + np.pi) % (2 * np.pi)
    return (-a[0], -a[1])


def spin_projection(n: int, a) -> np.ndarray:
    """Image of a Spin(n) element in SO(n)."""
    if n == 2:
        return rotation2(2 * float(a))
    return quaternion_pair_to_so4(a[0], a[1])


def _one_preimage(G: FiniteRotationGroup, idx: int):
    if G.n == 2:
        return (so2_angle(G.elements[idx]) / 2) % (2 * np.pi)
    qL, qR = G.quaternions[idx]
    return (np.array(qL), np.array(qR))


@dataclass(frozen=True)
class SpinLift:
    """A subgroup of Spin(n) mapping isomorphically onto ``base``.

    ``elements[i]`` lifts ``base.elements[i]``: an angle for ``n = 2`` and a
    pair of quaternion arrays for ``n = 4``.
    """

    base: FiniteRotationGroup
    elements: tuple = field(repr=False)

    @property
    def n(self) -> int:
        return self.base.n

    def projection_error(self) -> float:
        return max(float(np.max(np.abs(spin_projection(self.n, s) - E)))
                   for s, E in zip(self.elements, self.base.elements))

    def homomorphism_error(self) -> float:
        """Largest deviation of ``lift(a) lift(b)`` from ``lift(ab)``."""
        worst = 0.0
        m = self.base.order
        for a in range(m):
            for b in range(m):
                prod = _spin_mul(self.n, self.elements[a], self.elements[b])
                target = self.elements[self.base.table[a, b]]
                if self.n == 2:
                    d = abs(np.angle(np.exp(1j * (prod - target))))
                else:
                    d = max(np.max(np.abs(prod[0] - target[0])), np.max(np.abs(prod[1] - target[1])))
                worst = max(worst, float(d))
        return worst

    def contains_minus_one(self) -> bool:
        minus = _spin_key(self.n, _spin_neg(self.n, _spin_identity(self.n)))
        return any(_spin_key(self.n, s) == minus for s in self.elements)

    def describe(self) -> list:
        if self.n == 2:
            return [float(t) for t in self.elements]
        return [[list(map(float, qL)), list(map(float, qR))] for qL, qR in self.elements]


def _generating_indices(G: FiniteRotationGroup) -> list[int]:
    """Greedy generating set: add elements outside the current subgroup."""
    gens: list[int] = []
    span = {0}
    for idx in range(1, G.order):
        if idx in span:
            continue
        gens.append(idx)
        frontier = list(span)
        span = set(span)
        # closure of span under right multiplication by the generators
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    c = int(G.table[a, g])
                    if c not in span:
                        span.add(c)
                        nxt.append(c)
            frontier = nxt
        if len(span) == G.order:
            break
    return gens


def enumerate_spin_lifts(G: FiniteRotationGroup) -> list[SpinLift]:
    """All subgroups of Spin(n) that project isomorphically onto ``G``.

    Each choice of signs on a generating set determines a candidate
    subgroup of the preimage; it is a lift exactly when its closure has
    order ``|G|`` (equivalently, it avoids ``-1``).
    """
    n = G.n
    if n not in (2, 4):
        raise UnsupportedDimension("spin lifts are implemented for n = 2 and n = 4")
    gens = _generating_indices(G)
    pre = {i: _one_preimage(G, i) for i in gens}
    found: dict[tuple, SpinLift] = {}
    for signs in itertools.product((1, -1), repeat=len(gens)):
        chosen = [pre[i] if s > 0 else _spin_neg(n, pre[i]) for i, s in zip(gens, signs)]
        # closure in Spin(n), tracking which base element each product covers
        ident = _spin_identity(n)
        lifted = {0: ident}
        keys = {_spin_key(n, ident)}
        frontier = [0]
        ok = True
        while frontier and ok:
            nxt = []
            for a in frontier:
                for g_idx, g in zip(gens, chosen):
                    c = int(G.table[a, g_idx])
                    prod = _spin_mul(n, lifted[a], g)
                    if c in lifted:
                        if _spin_key(n, prod) != _spin_key(n, lifted[c]):
                            ok = False  # both preimages of c reached: -1 is in the closure
                            break
                        continue
                    lifted[c] = prod
                    keys.add(_spin_key(n, prod))
                    nxt.append(c)
                if not ok:
                    break
            frontier = nxt
        if not ok or len(lifted) != G.order:
            continue
        elems = tuple(lifted[i] for i in range(G.order))
        lift = SpinLift(G, elems)
        if lift.homomorphism_error() > 1e-9:
            continue
        signature = tuple(sorted(_spin_key(n, s) for s in elems))
        found.setdefault(signature, lift)
    return list(found.values())


def weyl_fixed_subspaces(L: SpinLift, tol: float = 1e-9) -> tuple[int, int]:
    """Complex dimensions of the common fixed spaces on the two half-spinor spaces.

    The ``qL`` factor acts on the positive half-spinors and ``qR`` on the
    negative ones, each by the 2x2 matrix of left quaternion
    multiplication.
    """
    if L.n != 4:
        raise UnsupportedDimension("Weyl fixed spaces are defined here for n = 4")
    dims = []
    for slot in (0, 1):
        blocks = [su2_matrix(s[slot]) - np.eye(2) for s in L.elements]
        stacked = np.vstack(blocks)
        sv = np.linalg.svd(stacked, compute_uv=False)
        dims.append(int(np.sum(sv < tol)) + (2 - len(sv)))
    return dims[0], dims[1]
