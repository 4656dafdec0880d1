"""Spinor fields, the spin connection and twistor spinors as parallel sections.

Spinors are stored by their components in the orthonormal frame of a
:class:`FrameField` (Gram-Schmidt of the coordinate frame, optionally
rotated by a gauge).  A twistor spinor ``phi`` satisfies
``nabla_X phi + (1/n) X . D phi = 0``; together with ``psi = D phi`` it is
a parallel section of the double bundle ``Sigma (+) Sigma`` for the
connection

    nabla^E_X (phi, psi) = (nabla_X phi + (1/n) X . psi,
                            nabla_X psi - (n/2) L(X) . phi)

with ``L`` the Schouten endomorphism.  Along a curve ``c`` the section
solves ``dPhi/dt = -A(c') Phi`` where ``A`` holds the connection
coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, expm_frechet
from scipy.stats import qmc

from .clifford import CliffordRep, build_clifford, pair_spin_matrix, pin_lift
from .conformal import invert_jacobian, invert_point
from .curvature import curvature_arrays
from .metrics import DomainError, MetricChart


class IntegrationAccuracyError(RuntimeError):
    """The transported state violated the exponential norm bound."""


class NonExtendable(RuntimeError):
    """Per-curve limits at a puncture disagree beyond tolerance."""


class TrivialField(ValueError):
    """The spinor field vanishes identically."""


class HolonomyInconsistent(RuntimeError):
    """The holonomy fixed space does not have the expected dimension."""


# ---------------------------------------------------------------------------
# frames and connection forms


def _lower_half(M):
    """Strict lower triangle plus half the diagonal."""
    return np.tril(M, -1) + 0.5 * np.eye(M.shape[-1]) * np.diagonal(M, axis1=-2, axis2=-1)[..., None, :]


class FrameField:
    """Orthonormal frames of a chart and the induced spin connection.

    The frame at ``y`` is the Gram-Schmidt orthonormalisation of the
    coordinate frame in its natural order, i.e. ``E = L^-T`` for the
    Cholesky factor ``g = L L^T``; its columns are the frame vectors.  A
    ``gauge`` callable ``y -> A(y)`` (skew) replaces it by ``E expm(A)``;
    spinor components then change by ``expm(-sigma(A))``.

    Parameters
    ----------
    g : MetricChart
    gauge : callable, optional
    rep : CliffordRep, optional
    """

    def __init__(self, g: MetricChart, gauge: Callable | None = None, rep: CliffordRep | None = None):
        self.g = g
        self.gauge = gauge
        self.rep = rep if rep is not None else build_clifford(g.n)
        self.n = g.n

    # frames ---------------------------------------------------------------
    def _base(self, y):
        G = self.g.metric(y)
        L = np.linalg.cholesky(G)
        E = np.swapaxes(np.linalg.inv(L), -1, -2)
        return G, L, E

    def frame(self, y) -> np.ndarray:
        y = np.asarray(y, float)
        _, _, E = self._base(y)
        if self.gauge is not None:
            E = E @ expm(self.gauge(y))
        return E

    def _gauge_and_derivative(self, y):
        A = np.asarray(self.gauge(y), float)
        h = 1e-6 * max(1.0, float(np.linalg.norm(y)))
        out = []
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = h
            dA = (np.asarray(self.gauge(y + e)) - np.asarray(self.gauge(y - e))) / (2 * h)
            R, dR = expm_frechet(A, dA)
            out.append(dR)
        return expm(A), np.array(out)

    def frame_and_derivative(self, y):
        """``(G, E, dE)`` at a single point; ``dE[k] = d_k E``."""
        y = np.asarray(y, float)
        G, L, E = self._base(y)
        dG = self.g.dmetric(y) if self.g.dmetric is not None else self.g.dg(y)
        self._dG = dG
        Linv = np.linalg.inv(L)
        M = Linv @ dG @ Linv.T                   # [k] = L^-1 d_k g L^-T
        dL = L @ _lower_half(M)
        dE = -E @ np.swapaxes(dL, -1, -2) @ E
        if self.gauge is not None:
            R, dR = self._gauge_and_derivative(y)
            dE = dE @ R + E @ dR
            E = E @ R
        return G, E, dE

    def connection_form(self, y) -> np.ndarray:
        """``W[k, a, b] = g(e_a, nabla_{d_k} e_b)`` at one point (skew in ``a, b``).

        Uses ``g Gamma_k = Gamma1_k`` with first-kind symbols
        ``Gamma1[k, i, j] = (d_k g_ij + d_j g_ik - d_i g_kj) / 2``.
        """
        y = np.asarray(y, float)
        G, E, dE = self.frame_and_derivative(y)
        dG = self._dG
        first = 0.5 * (dG + np.einsum("jik->kij", dG) - np.einsum("ikj->kij", dG))
        return np.einsum("ia,kib->kab", E, G @ dE + first @ E)

    def spin_connection(self, y, X) -> np.ndarray:
        """``Omega(X) = sigma(omega(X))`` for ``X`` in coordinate components."""
        W = np.einsum("k,kab->ab", np.asarray(X, float), self.connection_form(y))
        return self.rep.sigma(W)

    def to_frame(self, y, X) -> np.ndarray:
        """Frame components of the coordinate vector ``X``."""
        E = self.frame(y)
        return np.linalg.solve(E, np.asarray(X, float))

    def to_coordinates(self, y, Xf) -> np.ndarray:
        return self.frame(y) @ np.asarray(Xf, float)

    def spinor_gauge(self, y) -> np.ndarray:
        """``S`` with ``Ad(S) = expm(A(y))``; identity without a gauge."""
        if self.gauge is None:
            return np.eye(self.rep.dim, dtype=complex)
        return expm(self.rep.sigma(np.asarray(self.gauge(np.asarray(y, float)))))


def schouten_endomorphism(g: MetricChart, p, frame: FrameField | None = None) -> np.ndarray:
    """Schouten endomorphism ``L = (s/(2(n-1)) Id - Ric) / (n-2)`` in the orthonormal frame."""
    n = g.n
    if n < 3:
        raise ValueError("the Schouten endomorphism needs n >= 3")
    frame = frame or FrameField(g)
    p = np.asarray(p, float)
    _, _, _, Ric, s = curvature_arrays(g, p)
    E = frame.frame(p)
    ric_frame = E.T @ Ric @ E
    return (s / (2 * (n - 1)) * np.eye(n) - ric_frame) / (n - 2)


def twistor_connection(g: MetricChart, frame: FrameField, p, X, schouten: np.ndarray | None = None) -> np.ndarray:
    """Connection coefficients ``A(X)`` of ``nabla^E`` at ``p``.

    ``X`` is given in orthonormal-frame components.  In the chosen frame
    ``nabla^E_X = X(.) + A(X)`` with the block matrix
    ``[[Omega(X), gamma(X)/n], [-(n/2) gamma(L X), Omega(X)]]``.
    """
    n = g.n
    rep = frame.rep
    p = np.asarray(p, float)
    Xf = np.asarray(X, float)
    L = schouten_endomorphism(g, p, frame) if schouten is None else schouten
    Om = frame.spin_connection(p, frame.to_coordinates(p, Xf))
    N = rep.dim
    A = np.zeros((2 * N, 2 * N), dtype=complex)
    A[:N, :N] = Om
    A[N:, N:] = Om
    A[:N, N:] = rep.clifford_mult(Xf) / n
    A[N:, :N] = -(n / 2) * rep.clifford_mult(L @ Xf)
    return A


# ---------------------------------------------------------------------------
# curves and transport


@dataclass(frozen=True)
class Curve:
    """A C^1 curve ``t -> point(t)`` on ``[0, 1]`` with velocity ``velocity(t)``."""

    point: Callable
    velocity: Callable
    breaks: tuple = (0.0, 1.0)


def segment(p, q) -> Curve:
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    d = q - p
    return Curve(lambda t: p + t * d, lambda t: d)


def polyline(points) -> Curve:
    """Piecewise-linear curve through ``points``, uniformly parametrised per segment."""
    P = np.asarray(points, float)
    m = len(P) - 1
    if m < 1:
        raise ValueError("a path needs at least two points")

    def locate(t):
        k = min(int(t * m), m - 1)
        return k, t * m - k

    def point(t):
        k, s = locate(t)
        return P[k] + s * (P[k + 1] - P[k])

    def velocity(t):
        k, _ = locate(t)
        return m * (P[k + 1] - P[k])

    return Curve(point, velocity, tuple(np.linspace(0.0, 1.0, m + 1)))


def rectangle_loop(p, i: int, j: int, size: float) -> Curve:
    p = np.asarray(p, float)
    ei = np.eye(len(p))[i] * size
    ej = np.eye(len(p))[j] * size
    return polyline([p, p + ei, p + ei + ej, p + ej, p])


@dataclass
class TransportResult:
    """Outcome of a parallel transport.

    Attributes
    ----------
    state : ndarray
        Transported state (vector or matrix of column states).
    t_end : float
        Curve parameter reached.
    exited : bool
        The curve left the chart; ``state`` is the value at ``t_end``.
    eps : float
        Sampled sup of the connection-coefficient norm along the curve.
    norm_ratio : float
        ``max_t ||state(t)|| / (exp(eps t) ||state(0)||)``.
    """

    state: np.ndarray
    t_end: float
    exited: bool
    eps: float
    norm_ratio: float


def _coefficients(g, frame, kind):
    n = g.n
    rep = frame.rep

    def A(x, v):
        Om = frame.spin_connection(x, v)
        if kind == "spin":
            return Om
        E = frame.frame(x)
        Xf = np.linalg.solve(E, v)
        L = schouten_endomorphism(g, x, frame)
        N = rep.dim
        M = np.zeros((2 * N, 2 * N), dtype=complex)
        M[:N, :N] = Om
        M[N:, N:] = Om
        M[:N, N:] = rep.clifford_mult(Xf) / n
        M[N:, :N] = -(n / 2) * rep.clifford_mult(L @ Xf)
        return M

    return A


def integrate_parallel_section(g: MetricChart, curve: Curve, initial, frame: FrameField | None = None,
                               kind: str = "twistor", rtol: float = 1e-10, atol: float = 1e-13,
                               monitor_samples: int = 33, allow_endpoint: bool = True) -> TransportResult:
    """Parallel transport of a spinor (``kind="spin"``) or twistor state along ``curve``.

    ``initial`` is a state vector or a matrix whose columns are states.
    The curve is checked against the chart domain beforehand; if it
    leaves, transport stops at the last sampled interior parameter and the
    result is flagged.  The endpoint ``t = 1`` may be a puncture of the
    chart when ``allow_endpoint`` is set.

    Raises
    ------
    IntegrationAccuracyError
        If ``||state(t)|| > exp(eps t) ||state(0)||`` beyond the tolerance.
    """
    frame = frame or FrameField(g)
    Y0 = np.asarray(initial, dtype=complex)
    shape = Y0.shape
    Acoef = _coefficients(g, frame, kind)

    ts = np.linspace(0.0, 1.0, 257)
    pts = np.array([curve.point(t) for t in ts])
    inside = g.domain.contains(pts)
    if allow_endpoint:
        inside[-1] = True
    if not inside[0]:
        raise DomainError("the curve starts outside the chart")
    exited = not bool(np.all(inside))
    t_stop = 1.0 if not exited else float(ts[max(int(np.argmin(inside)) - 1, 0)])
    if t_stop == 0.0:
        return TransportResult(Y0.copy(), 0.0, True, 0.0, 1.0)

    def rhs(t, y):
        x = curve.point(t)
        v = curve.velocity(t)
        return -(Acoef(x, v) @ y.reshape(shape)).ravel()

    tm = np.linspace(0.0, t_stop, monitor_samples)
    eps = max(float(np.linalg.norm(Acoef(curve.point(t), curve.velocity(t)), 2)) for t in tm)
    y = Y0.ravel()
    norms = [np.linalg.norm(y)]
    times = [0.0]
    brk = [b for b in curve.breaks if 0.0 < b < t_stop] + [t_stop]
    t0 = 0.0
    for t1 in brk:
        if t1 <= t0:
            continue
        inner = [t for t in tm if t0 < t < t1] + [t1]
        # keep evaluations strictly inside each smooth piece
        sol = solve_ivp(rhs, (t0, t1), y, method="DOP853", rtol=rtol, atol=atol, t_eval=inner)
        if not sol.success:
            raise IntegrationAccuracyError(sol.message)
        for k, t in enumerate(sol.t):
            norms.append(np.linalg.norm(sol.y[:, k]))
            times.append(t)
        y = sol.y[:, -1]
        t0 = t1
    n0 = max(norms[0], 1e-300)
    ratio = max(nm / (np.exp(eps * t) * n0) for nm, t in zip(norms, times))
    if norms[0] > 0 and ratio > 1 + 1e3 * rtol + 1e-9:
        raise IntegrationAccuracyError(f"norm bound violated by factor {ratio:.3e}")
    return TransportResult(y.reshape(shape), t_stop, exited, eps, float(ratio))


# ---------------------------------------------------------------------------
# spinor fields and the twistor equation

#: fourth-order central first-derivative stencil
_D1_OFFS = np.array([-2.0, -1.0, 1.0, 2.0])
_D1_W = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


def _stencil_step(g: MetricChart, p, rel: float) -> float:
    return rel * float(g.domain.scale(np.asarray(p, float)))


def covariant_derivatives(g: MetricChart, frame: FrameField, field: Callable, p, rel_step: float = 1e-3):
    """``phi``, ``nabla_{e_a} phi`` (axis 0 indexes ``a``) and ``D phi`` at ``p``.

    ``field`` maps points ``(B, n)`` to frame components ``(B, N)``, or to
    ``(B, N, k)`` for ``k`` spinors at once.  Derivatives are fourth-order
    central differences.
    """
    p = np.asarray(p, float)
    n = g.n
    h = _stencil_step(g, p, rel_step)
    pts = p[None, None, :] + h * _D1_OFFS[None, :, None] * np.eye(n)[:, None, :]
    vals = np.asarray(field(pts.reshape(-1, n)))
    vals = vals.reshape((n, len(_D1_OFFS)) + vals.shape[1:])
    dphi = np.tensordot(_D1_W, vals, axes=(0, 1)) / h                # [k] = d_k phi
    phi = np.asarray(field(p[None]))[0]
    Om = frame.rep.sigma(frame.connection_form(p))                    # [k] = Omega(d_k)
    nab_coord = dphi + np.matmul(Om, phi)
    E = frame.frame(p)
    nab = np.tensordot(E.T, nab_coord, axes=(1, 0))                   # [a] = nabla_{e_a}
    D = np.einsum("aij,aj...->i...", frame.rep.gammas, nab)
    return phi, nab, D


def twistor_residual(g: MetricChart, frame: FrameField, field: Callable, p, X, rel_step: float = 1e-3) -> np.ndarray:
    """``nabla_X phi + (1/n) X . D phi`` at ``p`` for ``X`` in frame components."""
    X = np.asarray(X, float)
    _, nab, D = covariant_derivatives(g, frame, field, p, rel_step)
    return np.tensordot(X, nab, axes=(0, 0)) + frame.rep.clifford_mult(X) @ D / g.n


def dirac_field(g: MetricChart, frame: FrameField, field: Callable, rel_step: float = 1e-3) -> Callable:
    """The field ``x -> D phi (x)`` (finite differences at every point)."""

    def psi(X):
        X = np.atleast_2d(np.asarray(X, float))
        return np.array([covariant_derivatives(g, frame, field, x, rel_step)[2] for x in X])

    return psi


def dirac_derivative_check(g: MetricChart, frame: FrameField, field: Callable, p, X,
                           inner_step: float = 1e-3, outer_step: float = 1e-2) -> np.ndarray:
    """``nabla_X (D phi) - (n/2) L(X) . phi`` at ``p`` for ``X`` in frame components."""
    X = np.asarray(X, float)
    psi = dirac_field(g, frame, field, inner_step)
    phi, _, _ = covariant_derivatives(g, frame, field, p, inner_step)
    _, nab_psi, _ = covariant_derivatives(g, frame, psi, p, outer_step)
    L = schouten_endomorphism(g, p, frame)
    return np.tensordot(X, nab_psi, axes=(0, 0)) - (g.n / 2) * frame.rep.clifford_mult(L @ X) @ phi


def flat_twistor_field(phi0, psi0, rep: CliffordRep | None = None) -> Callable:
    """``x -> phi0 - (1/n) x . psi0``, the twistor spinors of flat space."""
    phi0 = np.asarray(phi0, complex)
    psi0 = np.asarray(psi0, complex)
    N = len(phi0)
    n = int(round(2 * np.log2(N)))
    rep = rep or build_clifford(n)

    def f(x):
        x = np.asarray(x, float)
        return phi0 - np.einsum("...ij,j->...i", rep.clifford_mult(x), psi0) / n

    f.phi0, f.psi0, f.n = phi0, psi0, n
    return f


def conformal_twistor_transport(field: Callable, u) -> Callable:
    """Twistor spinor of ``u^2 g`` from one of ``g``: ``phi_bar = u^(1/2) phi``.

    Frames are rescaled by ``1/u`` so that spinor components are
    identified; Gram-Schmidt frames of ``u^2 g`` are exactly such frames.
    ``u`` is a callable or a :class:`ScalarField`.
    """
    val = getattr(u, "value", u)

    def f(x):
        x = np.asarray(x, float)
        w = np.asarray(val(x), float)
        if np.any(w <= 0):
            raise DomainError("conformal factor must be positive")
        return np.sqrt(w)[..., None] * field(x)

    return f


# ---------------------------------------------------------------------------
# zeros


@dataclass(frozen=True)
class SpinorZero:
    point: np.ndarray
    psi_norm: float
    isolated: bool


def _real_residual(vals):
    return np.concatenate([vals.real, vals.imag], axis=-1)


def twistor_zero_locus(field: Callable, box: tuple[float, float], n: int, seeds_per_axis: int = 16,
                       g: MetricChart | None = None, frame: FrameField | None = None,
                       tol: float = 1e-10, dedup: float = 1e-6, iterations: int = 40) -> list[SpinorZero]:
    """All zeros of ``field`` in the cube ``box^n`` by Gauss-Newton on ``|phi|^2``.

    Seeds form a ``seeds_per_axis^n`` grid; converged points closer than
    ``dedup`` are merged.  Each zero is certified isolated by checking that
    ``D phi`` does not vanish there.
    """
    lo, hi = map(float, box)
    g = g or _flat(n)
    frame = frame or FrameField(g)
    probe = np.asarray(field(np.zeros((1, n))))
    if np.allclose(probe, 0) and all(np.allclose(field(np.eye(n)[k][None] * 0.5 * (hi - lo)), 0) for k in range(n)):
        raise TrivialField("the spinor field vanishes identically")
    axis = lo + (np.arange(seeds_per_axis) + 0.5) * (hi - lo) / seeds_per_axis
    X = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    h = 1e-6 * max(1.0, hi - lo)
    for _ in range(iterations):
        r = _real_residual(np.asarray(field(X)))
        J = np.stack([(_real_residual(np.asarray(field(X + h * e))) - _real_residual(np.asarray(field(X - h * e))))
                      / (2 * h) for e in np.eye(n)], axis=-1)
        step = np.einsum("bij,bj->bi", np.linalg.pinv(J), r)
        X = X - step
        if np.max(np.abs(step)) < 1e-14 * max(1.0, hi - lo):
            break
    res = np.linalg.norm(np.asarray(field(X)), axis=-1)
    ok = (res < tol) & np.all((X >= lo - 1e-9) & (X <= hi + 1e-9), axis=1)
    zeros: list[np.ndarray] = []
    for x in X[ok]:
        if all(np.linalg.norm(x - z) > dedup for z in zeros):
            zeros.append(x)
    out = []
    for z in sorted(zeros, key=lambda v: tuple(v)):
        _, _, D = covariant_derivatives(g, frame, field, z)
        pn = float(np.linalg.norm(D))
        out.append(SpinorZero(z, pn, pn > 1e-8))
    return out


def growth_exponent(field: Callable, P, radii=None, directions: int = 8, seed: int = 0) -> float:
    """Least-squares slope of ``log |phi(P + r u)|`` against ``log r``."""
    P = np.asarray(P, float)
    n = len(P)
    radii = np.asarray(radii if radii is not None else 2.0 ** -np.arange(1, 9), float)
    u = qmc.Sobol(d=n, scramble=True, seed=seed).random(directions) - 0.5
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    lr, ln = [], []
    for r in radii:
        vals = np.linalg.norm(np.asarray(field(P + r * u)), axis=-1)
        lr.extend([np.log(r)] * len(u))
        ln.extend(np.log(vals))
    return float(np.polyfit(lr, ln, 1)[0])


def _flat(n):
    from .metrics import flat_metric
    return flat_metric(n)


# ---------------------------------------------------------------------------
# extension across a puncture


@dataclass
class ExtensionResult:
    """Limit of a parallel section at a puncture.

    Attributes
    ----------
    phi, psi : ndarray
        Common limit (mean of the per-curve limits).
    limits : ndarray (k, 2N)
        Per-curve limits.
    spread : float
        Largest pairwise distance of the per-curve limits.
    tolerance : float
    radius : float
        Length scale of the incoming curves.
    """

    phi: np.ndarray
    psi: np.ndarray
    limits: np.ndarray
    spread: float
    tolerance: float
    radius: float

    @property
    def certified(self) -> bool:
        return self.spread <= self.tolerance


def incoming_directions(n: int, count: int = 8) -> np.ndarray:
    """``count`` distinct unit directions: ``+-e_k`` first, then a Sobol fill."""
    base = [s * e for e in np.eye(n) for s in (1.0, -1.0)]
    if count > len(base):
        extra = qmc.Sobol(d=n, scramble=True, seed=11).random(count - len(base)) - 0.5
        base += list(extra / np.linalg.norm(extra, axis=1, keepdims=True))
    return np.array(base[:count])


def extend_to_puncture(g: MetricChart, state_at: Callable, center, radius: float,
                       frame: FrameField | None = None, count: int = 8, tol: float = 1e-5,
                       raise_on_failure: bool = True) -> ExtensionResult:
    """Continue a ``nabla^E``-parallel section into a puncture along straight rays.

    ``state_at(x)`` gives the twistor state ``(phi, psi)`` (length ``2N``)
    at a point off the puncture.  Each ray starts at ``center + radius u``
    and ends at ``center``; the spread of the per-ray limits certifies
    path independence, as the limits of a parallel section along different
    curves differ by at most a multiple of the enclosed loop length.
    """
    frame = frame or FrameField(g)
    c = np.asarray(center, float)
    limits = []
    for u in incoming_directions(g.n, count):
        start = c + radius * u
        s0 = np.asarray(state_at(start), complex)
        res = integrate_parallel_section(g, segment(start, c), s0, frame, kind="twistor")
        if res.exited:
            raise DomainError("an incoming ray leaves the chart")
        limits.append(res.state)
    limits = np.array(limits)
    spread = max(float(np.linalg.norm(a - b)) for a in limits for b in limits)
    N = frame.rep.dim
    mean = limits.mean(axis=0)
    out = ExtensionResult(mean[:N], mean[N:], limits, spread, tol, radius)
    if raise_on_failure and not out.certified:
        raise NonExtendable(f"limits along incoming rays differ by {spread:.3e} > {tol:.1e}")
    return out


# ---------------------------------------------------------------------------
# parallel spinors by transport


class TransportedSpinorField:
    """Spinor field obtained by parallel transport from a base point.

    Values are computed along a path from ``base``: an arc on the sphere
    ``|y| = |base|`` to the direction of the target, then a radial
    segment.  Computed values are cached as anchors; targets close to an
    anchor are reached by a short straight hop from it.  For a spinor in
    the holonomy fixed space the result does not depend on the path.

    Parameters
    ----------
    g : MetricChart
    base : array (n,)
    values : ndarray (N, k)
        Columns: spinors at ``base`` (frame components).
    hop : float
        Relative distance ``|y - anchor| / |y|`` below which an anchor is reused.
    """

    def __init__(self, g: MetricChart, base, values, frame: FrameField | None = None, hop: float = 0.15,
                 rtol: float = 1e-12):
        self.g = g
        self.frame = frame or FrameField(g)
        self.base = np.asarray(base, float)
        self.values = np.asarray(values, complex)
        self.hop = hop
        self.rtol = rtol
        self._anchors: list[np.ndarray] = [self.base]
        self._anchor_values: list[np.ndarray] = [self.values]

    def _transport(self, curve, start_values):
        return integrate_parallel_section(self.g, curve, start_values, self.frame, kind="spin",
                                          rtol=self.rtol, atol=1e-14, allow_endpoint=False).state

    def _from_base(self, y):
        r0 = np.linalg.norm(self.base)
        u0 = self.base / r0
        u1 = y / np.linalg.norm(y)
        ang = np.arccos(np.clip(u0 @ u1, -1.0, 1.0))
        waypoints = [u0]
        if ang > 2.5:
            # route around the antipode through an orthogonal direction
            w = np.eye(len(y))[int(np.argmin(np.abs(u0)))]
            w = w - (w @ u0) * u0
            waypoints.append(w / np.linalg.norm(w))
        waypoints.append(u1)
        vals = self.values
        for a, b in zip(waypoints[:-1], waypoints[1:]):
            vals = self._transport(_great_arc(a, b, r0), vals)
        return self._transport(segment(r0 * u1, y), vals)

    def __call__(self, Y):
        Y = np.asarray(Y, float)
        single = Y.ndim == 1
        Y = np.atleast_2d(Y)
        out = []
        for y in Y:
            A = np.array(self._anchors)
            d = np.linalg.norm(A - y, axis=1)
            k = int(np.argmin(d))
            if d[k] == 0:
                val = self._anchor_values[k]
            elif d[k] <= self.hop * np.linalg.norm(y):
                val = self._transport(segment(A[k], y), self._anchor_values[k])
            else:
                val = self._from_base(y)
                self._anchors.append(y.copy())
                self._anchor_values.append(val)
            out.append(val)
        out = np.array(out)
        return out[0] if single else out

    def column(self, j: int) -> Callable:
        """Single-spinor field of the ``j``-th basis column."""
        return lambda Y: self(Y)[..., j]


def _great_arc(a, b, r):
    ang = float(np.arccos(np.clip(a @ b, -1.0, 1.0)))
    if ang < 1e-14:
        return segment(r * a, r * b)
    w = b - (a @ b) * a
    w /= np.linalg.norm(w)
    return Curve(lambda t: r * (np.cos(ang * t) * a + np.sin(ang * t) * w),
                 lambda t: r * ang * (-np.sin(ang * t) * a + np.cos(ang * t) * w))


def holonomy(g: MetricChart, loop: Curve, frame: FrameField | None = None, kind: str = "spin") -> np.ndarray:
    """Holonomy matrix of the spin (or twistor) connection around ``loop``."""
    frame = frame or FrameField(g)
    N = frame.rep.dim * (1 if kind == "spin" else 2)
    return integrate_parallel_section(g, loop, np.eye(N, dtype=complex), frame, kind=kind,
                                      allow_endpoint=False).state


def fixed_space(mats, tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Joint fixed space of matrices: ``(basis columns, singular values)``."""
    N = mats[0].shape[0]
    stacked = np.vstack([M - np.eye(N) for M in mats])
    _, s, Vh = np.linalg.svd(stacked)
    null = s < tol
    return Vh[null].conj().T, s


@dataclass
class ParallelSpinors:
    """Parallel spinors of a chart, found from loop holonomies.

    Attributes
    ----------
    dimension : int
        Complex dimension of the joint holonomy fixed space.
    basis : ndarray (N, dimension)
        Orthonormal basis at the base point.
    singular_values : ndarray
        Singular values of the stacked ``H - I``.
    loop_residuals : list of float
        ``|H v - v|`` of the basis under each loop.
    chirality : str
        ``"+"``, ``"-"`` or ``"mixed"``.
    field : TransportedSpinorField
    """

    dimension: int
    basis: np.ndarray
    singular_values: np.ndarray
    loop_residuals: list
    chirality: str
    field: TransportedSpinorField = field(repr=False)


def parallel_spinor_on_EH(g: MetricChart, base=None, loop_size: float | None = None,
                          expected: int | None = 2, tol: float = 1e-6) -> ParallelSpinors:
    """Parallel spinors of an Eguchi-Hanson chart from spin holonomy.

    Rectangular loops in all coordinate planes at a base point near the
    bolt give holonomy matrices; their joint fixed space is the space of
    parallel spinors, turned into a field by parallel transport.
    """
    a = float(g.domain.inner) if g.domain.inner > 0 else 1.0
    base = np.asarray(base if base is not None else a * np.array([1.5, 0.45, 0.3, 0.2]), float)
    size = loop_size if loop_size is not None else 0.4 * a
    frame = FrameField(g)
    mats = []
    for i in range(g.n):
        for j in range(i + 1, g.n):
            mats.append(holonomy(g, rectangle_loop(base, i, j, size), frame))
    B, s = fixed_space(mats, tol)
    res = [float(np.linalg.norm(H @ B - B)) for H in mats]
    dim = B.shape[1]
    if expected is not None and dim != expected:
        raise HolonomyInconsistent(f"holonomy fixed space has dimension {dim}, expected {expected}; "
                                   f"loop residuals {res}")
    rep = frame.rep
    if dim and np.linalg.norm(rep.proj_minus @ B) < 1e-8:
        chir = "+"
    elif dim and np.linalg.norm(rep.proj_plus @ B) < 1e-8:
        chir = "-"
    else:
        chir = "mixed"
    return ParallelSpinors(dim, B, s, res, chir, TransportedSpinorField(g, base, B, frame))


def deck_spinor(rep: CliffordRep, qL, qR) -> np.ndarray:
    """Spinor action of the Spin(4) element ``(qL, qR)``."""
    return pair_spin_matrix(rep, np.asarray(qL, float), np.asarray(qR, float))


# ---------------------------------------------------------------------------
# inversion of spinors


def inversion_spinor_map(g: MetricChart, compact: MetricChart, y, rep: CliffordRep | None = None,
                         frame_g: FrameField | None = None, frame_c: FrameField | None = None) -> np.ndarray:
    """Spinor frame change from ``g`` at ``y`` to the inverted chart at ``z = y/|y|^2``.

    The frame ``F = |y|^2 (dz/dy) E_g(y)`` is orthonormal for
    ``|y|^-4 g`` in ``z`` coordinates and differs from the Gram-Schmidt
    frame ``E_c(z)`` by ``Q = E_c^-1 F`` in O(n) with ``det Q = -1``.
    Returns the Pin element ``S`` (``Ad S = Q``) that depends continuously
    on ``y``, built with reflection axis ``y/|y|``.
    """
    rep = rep or build_clifford(g.n)
    frame_g = frame_g or FrameField(g, rep=rep)
    frame_c = frame_c or FrameField(compact, rep=rep)
    y = np.asarray(y, float)
    z = invert_point(y)
    rho2 = float(y @ y)
    F = rho2 * invert_jacobian(y) @ frame_g.frame(y)
    Ec = frame_c.frame(z)
    Q = np.linalg.solve(Ec, F)
    return pin_lift(rep, Q, w=y / np.sqrt(rho2))


def inverted_spinor_field(g: MetricChart, compact: MetricChart, field: Callable,
                          rep: CliffordRep | None = None) -> Callable:
    """Field on the inverted chart: ``phi_bar(z) = |z| S(z) phi(y(z))``.

    This is the conformal weight ``u^(1/2)`` with ``u = |y|^-2`` combined
    with the frame change of :func:`inversion_spinor_map`.
    """
    rep = rep or build_clifford(g.n)
    fg = FrameField(g, rep=rep)
    fc = FrameField(compact, rep=rep)

    def f(Z):
        Z = np.asarray(Z, float)
        single = Z.ndim == 1
        Z = np.atleast_2d(Z)
        Y = invert_point(Z)
        vals = np.asarray(field(Y))
        out = np.array([np.linalg.norm(z) * inversion_spinor_map(g, compact, y, rep, fg, fc) @ v
                        for z, y, v in zip(Z, Y, vals)])
        return out[0] if single else out

    return f
