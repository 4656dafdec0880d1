"""Metric charts and the example metrics.

A :class:`MetricChart` is a coordinate domain plus a vectorized evaluator
``y -> g(y)``.  Points are arrays of shape ``(..., n)``; metrics come back
with shape ``(..., n, n)``, first derivatives as ``(..., n, n, n)`` indexed
``[k, i, j] = d_k g_ij`` and second derivatives as ``(..., n, n, n, n)``
indexed ``[l, k, i, j] = d_l d_k g_ij``.  Missing derivatives fall back to
central finite differences with step ``1e-4`` times the local coordinate
scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .groups import FiniteRotationGroup, make_cyclic_subgroup


class DomainError(ValueError):
    """Raised when a chart is evaluated outside its coordinate domain."""


class DegenerateConformalFactor(DomainError):
    """Raised when a conformal factor is not positive."""


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Domain:
    """Coordinate domain of a chart.

    ``kind`` is one of ``"space"`` (all of R^n), ``"ball"`` (``|y| < outer``),
    ``"annulus"`` (``|y| > inner``), ``"punctured_ball"``
    (``0 < |y| < outer``) or ``"bolt"`` (first two coordinates bounded by
    ``outer``).  ``deck`` is the deck group of a quotient chart, and
    ``added_point`` marks a chart that is completed by a point at the origin.
    ``end_order`` records the order of the group at infinity when the chart
    is a local chart of a space with a known asymptotic end.
    """

    kind: str = "space"
    inner: float = 0.0
    outer: float = np.inf
    deck: FiniteRotationGroup | None = None
    added_point: bool = False
    end_order: int | None = None

    def margin(self, y) -> np.ndarray:
        """Signed distance-like quantity, positive inside the domain."""
        y = np.asarray(y)
        if self.kind == "bolt":
            r = np.linalg.norm(y[..., :2], axis=-1)
            return self.outer - r
        r = np.linalg.norm(y, axis=-1)
        if self.kind == "space":
            return np.full(r.shape, np.inf)
        if self.kind == "ball":
            return self.outer - r
        if self.kind == "annulus":
            return r - self.inner
        if self.kind == "punctured_ball":
            if self.added_point:
                return self.outer - r
            return np.minimum(r, self.outer - r)
        raise ValueError(f"unknown domain kind {self.kind!r}")

    def contains(self, y) -> np.ndarray:
        return self.margin(y) > 0

    def scale(self, y) -> np.ndarray:
        """Local coordinate scale used for finite-difference steps."""
        y = np.asarray(y)
        r = np.linalg.norm(y, axis=-1)
        return np.maximum(r, 1.0) if self.kind in ("space", "ball", "bolt") else np.maximum(r, 1e-3)

    @property
    def deck_order(self) -> int:
        return 1 if self.deck is None else self.deck.order

    def stabilizer_order(self, p) -> int:
        """Number of deck elements fixing ``p``."""
        if self.deck is None:
            return 1
        p = np.asarray(p, float)
        return sum(1 for E in self.deck.elements if np.max(np.abs(E @ p - p)) < 1e-10)

    def order_at_infinity(self) -> int:
        return self.end_order if self.end_order is not None else self.deck_order


# ---------------------------------------------------------------------------
# finite differences


def _fd_first(f, y, h):
    """Central differences of a batched tensor field; derivative index first.

    ``f`` maps points ``(..., n)`` to tensors ``(..., *T)``; the result has
    shape ``(..., n, *T)``.  ``h`` holds one step per point.
    """
    y = np.asarray(y, float)
    n = y.shape[-1]
    h = np.broadcast_to(np.asarray(h, float), y.shape[:-1])
    out = []
    for k in range(n):
        step = np.zeros(y.shape)
        step[..., k] = h
        diff = f(y + step) - f(y - step)
        extra = diff.ndim - (y.ndim - 1)
        out.append(diff / (2 * h.reshape(h.shape + (1,) * extra)))
    return np.stack(out, axis=y.ndim - 1)


@dataclass(frozen=True)
class MetricChart:
    """A coordinate chart with a Riemannian metric.

    Parameters
    ----------
    n : int
        Dimension.
    metric : callable
        ``y -> g(y)``, vectorized over leading axes.
    dmetric, d2metric : callable, optional
        Exact first and second derivatives.
    perturbation : callable, optional
        ``y -> g(y) - I`` computed without cancellation; used by decay
        estimates far out in an asymptotically flat end.
    domain : Domain
    name : str
    fd_step : float
        Relative finite-difference step for missing derivatives.
    transition : ChartSwap, optional
        Chart change for two-chart atlases whose charts share one metric
        formula.  Integrators move a path to the companion chart once
        ``transition.needed(x)`` holds.
    """

    n: int
    metric: Callable
    dmetric: Callable | None = None
    d2metric: Callable | None = None
    perturbation: Callable | None = None
    domain: Domain = field(default_factory=Domain)
    name: str = "chart"
    fd_step: float = 1e-4
    transition: "ChartSwap | None" = None

    # -- evaluation -------------------------------------------------------
    def _check(self, y):
        y = np.asarray(y, float)
        if y.shape[-1] != self.n:
            raise DomainError(f"point has dimension {y.shape[-1]}, chart has {self.n}")
        if not np.all(self.domain.contains(y)):
            raise DomainError(f"point outside the domain of {self.name}")
        return y

    def g(self, y) -> np.ndarray:
        return self.metric(self._check(y))

    def h(self, y) -> np.ndarray:
        y = self._check(y)
        if self.perturbation is not None:
            return self.perturbation(y)
        return self.metric(y) - np.eye(self.n)

    def _step(self, y):
        return self.fd_step * self.domain.scale(y)

    def dg(self, y) -> np.ndarray:
        y = self._check(y)
        if self.dmetric is not None:
            return self.dmetric(y)
        return _fd_first(self.metric, y, self._step(y))

    def d2g(self, y) -> np.ndarray:
        y = self._check(y)
        if self.d2metric is not None:
            return self.d2metric(y)
        if self.dmetric is not None:
            return _fd_first(self.dmetric, y, self._step(y))
        inner = lambda x: _fd_first(self.metric, x, self._step(x))
        return _fd_first(inner, y, self._step(y))

    def fd_dg(self, y, step: float | None = None) -> np.ndarray:
        """Finite-difference first derivative (for checking exact ones)."""
        y = self._check(y)
        h = self._step(y) if step is None else np.full(np.shape(y)[:-1], step)
        return _fd_first(self.metric, y, h)

    def fd_d2g(self, y, step: float | None = None) -> np.ndarray:
        y = self._check(y)
        h = self._step(y) if step is None else np.full(np.shape(y)[:-1], step)
        d1 = self.dmetric if self.dmetric is not None else (lambda x: _fd_first(self.metric, x, h))
        return _fd_first(d1, y, h)

    def christoffel(self, y, check: bool = True) -> np.ndarray:
        """Christoffel symbols ``G[..., k, i, j]`` of the second kind.

        With ``check=False`` the domain test is skipped; integrators use
        this for trial stages that may poke slightly outside the chart.
        """
        if check:
            g = self.g(y)
            dg = self.dg(y)
        else:
            y = np.asarray(y, float)
            g = self.metric(y)
            dg = self.dmetric(y) if self.dmetric is not None else _fd_first(self.metric, y, self._step(y))
        ginv = np.linalg.inv(g)
        # first kind: [m, i, j] = 1/2 (d_i g_mj + d_j g_mi - d_m g_ij)
        first = 0.5 * (np.swapaxes(dg, -3, -2) + np.swapaxes(np.swapaxes(dg, -3, -2), -2, -1)
                       - dg)
        return np.einsum("...km,...mij->...kij", ginv, first)

    def with_domain(self, domain: Domain, name: str | None = None) -> "MetricChart":
        return replace(self, domain=domain, name=name or self.name)


@dataclass(frozen=True)
class ChartSwap:
    """Involutive change between two charts sharing one metric formula.

    ``apply(x)`` maps points and ``apply(x, v)`` points and velocities;
    ``needed(x)`` says where a path should change chart.
    """

    needed: Callable
    apply: Callable


# ---------------------------------------------------------------------------
# scalar fields for conformal factors


@dataclass(frozen=True)
class ScalarField:
    """A positive function with its gradient and Hessian (all vectorized)."""

    value: Callable
    grad: Callable
    hess: Callable
    name: str = "u"


def constant_field(c: float) -> ScalarField:
    return ScalarField(
        lambda y: np.full(np.shape(y)[:-1], float(c)),
        lambda y: np.zeros(np.shape(y)),
        lambda y: np.zeros(np.shape(y) + (np.shape(y)[-1],)),
        name=f"const({c})",
    )


def power_of_radius(p: float) -> ScalarField:
    """``u(y) = |y|^p``."""

    def value(y):
        return np.sum(y * y, axis=-1) ** (p / 2)

    def grad(y):
        s = np.sum(y * y, axis=-1)
        return (p * s ** (p / 2 - 1))[..., None] * y

    def hess(y):
        s = np.sum(y * y, axis=-1)
        n = y.shape[-1]
        c1 = p * s ** (p / 2 - 1)
        c2 = p * (p - 2) * s ** (p / 2 - 2)
        return c1[..., None, None] * np.eye(n) + c2[..., None, None] * y[..., :, None] * y[..., None, :]

    return ScalarField(value, grad, hess, name=f"rho^{p:g}")


def sphere_factor(radius: float = 1.0) -> ScalarField:
    """``u = (R^2 + |x|^2) / (2 R^2)``, turning the flat metric into the round one."""
    R2 = radius * radius

    def value(y):
        return (R2 + np.sum(y * y, axis=-1)) / (2 * R2)

    def grad(y):
        return y / R2

    def hess(y):
        n = y.shape[-1]
        return np.broadcast_to(np.eye(n) / R2, y.shape + (n,)).copy()

    return ScalarField(value, grad, hess, name="sphere-factor")


# ---------------------------------------------------------------------------
# example charts


def _zeros_like_metric(y, order):
    n = np.shape(y)[-1]
    return np.zeros(np.shape(y)[:-1] + (n,) * (order + 2))


def flat_metric(n: int) -> MetricChart:
    """Euclidean metric on R^n."""
    eye = np.eye(n)
    return MetricChart(
        n,
        lambda y: np.broadcast_to(eye, np.shape(y)[:-1] + (n, n)).copy(),
        lambda y: _zeros_like_metric(y, 1),
        lambda y: _zeros_like_metric(y, 2),
        lambda y: _zeros_like_metric(y, 0),
        Domain("space"),
        name=f"flat:{n}",
    )


def round_sphere_chart(n: int, radius: float = 1.0, extent: float = 100.0) -> MetricChart:
    """Round sphere of radius ``R`` in the stereographic chart.

    ``g = 4 R^4 / (R^2 + |x|^2)^2 * I``.  The chart is cut off at
    ``|x| < extent * R``; the omitted cap around the projection pole has
    geodesic radius about ``2 / extent``.
    """
    R = float(radius)
    R2, R4 = R * R, R ** 4
    eye = np.eye(n)

    def conf(y):
        return 4 * R4 / (R2 + np.sum(y * y, axis=-1)) ** 2

    def metric(y):
        return conf(y)[..., None, None] * eye

    def dmetric(y):
        q = R2 + np.sum(y * y, axis=-1)
        dc = (-16 * R4 / q ** 3)[..., None] * y
        return dc[..., :, None, None] * eye

    def d2metric(y):
        q = R2 + np.sum(y * y, axis=-1)
        d2c = ((-16 * R4 / q ** 3)[..., None, None] * eye
               + (96 * R4 / q ** 4)[..., None, None] * y[..., :, None] * y[..., None, :])
        return d2c[..., :, :, None, None] * eye

    def pert(y):
        return (conf(y) - 1)[..., None, None] * eye

    return MetricChart(n, metric, dmetric, d2metric, pert, Domain("ball", outer=extent * R),
                       name=f"sphere:{n}:{R:g}")


def quotient_annulus(base: MetricChart, G: FiniteRotationGroup, inner: float = 0.0,
                     check_points: int = 16, seed: int = 0) -> MetricChart:
    """Chart of ``base`` tagged with the deck group ``G``.

    The evaluator is unchanged; ``G`` must act by isometries, which is
    verified at random points.
    """
    if G.n != base.n:
        raise ValueError("group dimension does not match chart dimension")
    rng = np.random.default_rng(seed)
    scale = max(inner, 1.0)
    pts = rng.normal(size=(check_points, base.n))
    pts *= (scale * (1.5 + rng.random((check_points, 1)))) / np.linalg.norm(pts, axis=1, keepdims=True)
    pts = pts[base.domain.contains(pts)]
    gy = base.g(pts)
    for E in G.elements:
        moved = pts @ E.T
        pulled = np.einsum("ai,...ab,bj->...ij", E, base.g(moved), E)
        if np.max(np.abs(pulled - gy)) > 1e-10 * max(1.0, float(np.max(np.abs(gy)))):
            raise ValueError("group does not act by isometries of the chart")
    kind = "annulus" if inner > 0 else base.domain.kind
    dom = replace(base.domain, kind=kind, inner=max(inner, base.domain.inner), deck=G)
    return replace(base, domain=dom, name=f"quotient:{base.name}:{G.name}")


# -- Eguchi-Hanson --------------------------------------------------------

_J4 = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)


def _rank_one_terms(F, dF, d2F, M, y, second: bool = True):
    """Value and exact derivatives of ``F(s) u u^T`` with ``u = M y``, ``s = |y|^2``.

    ``dF`` and ``d2F`` are derivatives with respect to ``s``; with
    ``second=False`` the second derivative is skipped (returned as None).
    """
    u = y @ M.T
    uu = u[..., :, None] * u[..., None, :]
    # d_k u_i = M_ik
    du = np.broadcast_to(M.T, y.shape[:-1] + M.shape)  # [k, i] = M_ik
    duu = du[..., :, :, None] * u[..., None, None, :] + u[..., None, :, None] * du[..., :, None, :]
    val = F[..., None, None] * uu
    d1 = (2 * dF)[..., None, None, None] * y[..., :, None, None] * uu[..., None, :, :] \
        + F[..., None, None, None] * duu
    if not second:
        return val, d1, None
    n = y.shape[-1]
    eye = np.eye(n)
    # d_l d_k (F u_i u_j)
    d2 = ((2 * dF)[..., None, None, None, None] * eye[:, :, None, None]
          + (4 * d2F)[..., None, None, None, None]
          * (y[..., :, None] * y[..., None, :])[..., None, None]) * uu[..., None, None, :, :]
    d2 = d2 + (2 * dF)[..., None, None, None, None] * (
        y[..., None, :, None, None] * duu[..., :, None, :, :]
        + y[..., :, None, None, None] * duu[..., None, :, :, :])
    ddu = du[..., :, None, :, None] * du[..., None, :, None, :] \
        + du[..., None, :, :, None] * du[..., :, None, None, :]
    d2 = d2 + F[..., None, None, None, None] * ddu
    return val, d1, d2


def eguchi_hanson(a: float) -> MetricChart:
    """Eguchi-Hanson metric on ``r > a`` in Cartesian coordinates of R^4.

    With ``s = r^2`` and ``K = J y`` the generator of the Hopf circle, the
    metric is ``I + A(s) y y^T + B(s) K K^T`` where
    ``A = a^4 / (s (s^2 - a^4))`` and ``B = -a^4 / s^3``; this is the form
    ``dr^2 / f + (r^2/4) f sigma_3^2 + (r^2/4)(sigma_1^2 + sigma_2^2)`` with
    ``f = 1 - (a/r)^4``.  The chart carries the deck group ``{+-I}``; its
    points are the double cover of the end of the Eguchi-Hanson space.
    """
    if a <= 0:
        raise ValueError("bolt parameter must be positive")
    a4 = float(a) ** 4
    eye = np.eye(4)

    def coeffs(y):
        s = np.sum(y * y, axis=-1)
        D = s ** 3 - a4 * s
        Dp = 3 * s ** 2 - a4
        Dpp = 6 * s
        A = a4 / D
        Ap = -a4 * Dp / D ** 2
        App = -a4 * (Dpp * D - 2 * Dp ** 2) / D ** 3
        B = -a4 / s ** 3
        Bp = 3 * a4 / s ** 4
        Bpp = -12 * a4 / s ** 5
        return (A, Ap, App), (B, Bp, Bpp)

    def pert(y):
        y = np.asarray(y, float)
        (A, _, _), (B, _, _) = coeffs(y)
        K = y @ _J4.T
        return A[..., None, None] * y[..., :, None] * y[..., None, :] \
            + B[..., None, None] * K[..., :, None] * K[..., None, :]

    def metric(y):
        return eye + pert(y)

    def both(y, second=True):
        y = np.asarray(y, float)
        (A, Ap, App), (B, Bp, Bpp) = coeffs(y)
        _, d1a, d2a = _rank_one_terms(A, Ap, App, eye, y, second)
        _, d1b, d2b = _rank_one_terms(B, Bp, Bpp, _J4, y, second)
        return d1a + d1b, (d2a + d2b if second else None)

    deck = make_cyclic_subgroup(4, 2, (1, 1))
    return MetricChart(4, metric, lambda y: both(y, False)[0], lambda y: both(y)[1], pert,
                       Domain("annulus", inner=float(a), deck=deck), name=f"eguchi-hanson:{a:g}")


def eh_bolt_to_cartesian(a: float, x) -> np.ndarray:
    """Map bolt-chart coordinates ``(zeta1, zeta2, w1, w2)`` to one lift ``y``.

    ``zeta = z2 / z1`` is the affine coordinate on the bolt and
    ``w = S exp(2 i arg z1)`` with ``S^2 = r^2 - a^4 / r^2``.  Only points off
    the bolt (``w != 0``) have a Cartesian image.
    """
    x = np.asarray(x, float)
    zeta = x[..., 0] + 1j * x[..., 1]
    w = x[..., 2] + 1j * x[..., 3]
    S2 = np.abs(w) ** 2
    r2 = (S2 + np.sqrt(S2 ** 2 + 4 * a ** 4)) / 2
    mod1 = np.sqrt(r2 / (1 + np.abs(zeta) ** 2))
    z1 = mod1 * np.exp(0.5j * np.angle(w))
    z2 = zeta * z1
    return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)


def eguchi_hanson_bolt_chart(a: float, zeta_max: float = 4.0) -> MetricChart:
    """Smooth chart of the Eguchi-Hanson space around the bolt point ``[1:0]``.

    Coordinates are ``zeta = z2/z1`` along the bolt and the complex fibre
    coordinate ``w = S exp(2 i arg z1)``, ``S^2 = r^2 - a^4/r^2``, on which
    the antipodal identification has already been taken (so the deck group
    is trivial and the bolt is ``w = 0``).  In these coordinates

    ``g = r^2 |dzeta|^2 / (1+|zeta|^2)^2 + |dw|^2/4 + Q(r) (w.dw)^2
    + (1/2)(w x dw) A + (|w|^2/4) A^2``

    with ``Q = r^2 (3 r^4 + a^4) / (4 (r^4 + a^4)^2)`` and
    ``A = 2 (zeta1 dzeta2 - zeta2 dzeta1) / (1 + |zeta|^2)``.  First
    derivatives are analytic (``metric.complex_step`` gives an independent
    complex-step evaluation for checks).
    The chart is cut off at ``|zeta| < zeta_max``; the companion chart
    around ``[0:1]`` (same formula, see :func:`bolt_chart_swap`) covers
    the rest, and geodesic integrators change chart automatically.
    """
    a4 = float(a) ** 4

    def metric(x):
        x = np.asarray(x)
        z1, z2, w1, w2 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
        S2 = w1 * w1 + w2 * w2
        r2 = (S2 + np.sqrt(S2 * S2 + 4 * a4)) / 2
        r4 = r2 * r2
        Q = r2 * (3 * r4 + a4) / (4 * (r4 + a4) ** 2)
        q = 1 + z1 * z1 + z2 * z2
        base = r2 / q ** 2
        A = np.stack([-2 * z2 / q, 2 * z1 / q], axis=-1)  # coefficients of dzeta1, dzeta2
        g = np.zeros(x.shape[:-1] + (4, 4), dtype=x.dtype)
        g[..., 0, 0] = base
        g[..., 1, 1] = base
        g[..., 2, 2] = 0.25
        g[..., 3, 3] = 0.25
        wv = np.stack([w1, w2], axis=-1)
        g[..., 2:, 2:] += Q[..., None, None] * wv[..., :, None] * wv[..., None, :]
        # (1/2)(w1 dw2 - w2 dw1) * A: symmetric cross terms
        cross = 0.5 * np.stack([-w2, w1], axis=-1)  # coefficients of dw1, dw2
        block = 0.5 * (cross[..., None, :] * A[..., :, None])  # [zeta-index, w-index]
        g[..., :2, 2:] += block
        g[..., 2:, :2] += np.swapaxes(block, -1, -2)
        g[..., :2, :2] += (S2 / 4)[..., None, None] * A[..., :, None] * A[..., None, :]
        return g

    def dmetric(x):
        """Exact first derivatives by the chain rule through ``r^2(|w|^2)``."""
        x = np.asarray(x, float)
        z1, z2, w1, w2 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
        S2 = w1 * w1 + w2 * w2
        root = np.sqrt(S2 * S2 + 4 * a4)
        R = (S2 + root) / 2
        dR = 0.5 * (1 + S2 / root)          # dR/dS2
        R2 = R * R
        Q = R * (3 * R2 + a4) / (4 * (R2 + a4) ** 2)
        dQ = ((9 * R2 + a4) * (R2 + a4) - 4 * R * (3 * R * R2 + a4 * R)) / (4 * (R2 + a4) ** 3)
        q = 1 + z1 * z1 + z2 * z2
        A = np.stack([-2 * z2 / q, 2 * z1 / q], axis=-1)
        # dA[..., k, a] = d A_a / d zeta_k
        dA = np.empty(x.shape[:-1] + (2, 2))
        dA[..., 0, 0] = 4 * z1 * z2 / q ** 2
        dA[..., 1, 0] = -2 / q + 4 * z2 * z2 / q ** 2
        dA[..., 0, 1] = 2 / q - 4 * z1 * z1 / q ** 2
        dA[..., 1, 1] = -4 * z1 * z2 / q ** 2
        wv = np.stack([w1, w2], axis=-1)
        c = np.stack([-w2, w1], axis=-1)
        dc = np.array([[0.0, 1.0], [-1.0, 0.0]])  # dc[k, b] = d c_b / d w_k
        out = np.zeros(x.shape[:-1] + (4, 4, 4))
        zz = np.stack([z1, z2], axis=-1)
        for k in range(2):          # zeta derivatives
            dbase = -4 * R * zz[..., k] / q ** 3
            out[..., k, 0, 0] += dbase
            out[..., k, 1, 1] += dbase
            blk = 0.25 * c[..., None, :] * dA[..., k, :, None]
            out[..., k, :2, 2:] += blk
            out[..., k, 2:, :2] += np.swapaxes(blk, -1, -2)
            AdA = dA[..., k, :, None] * A[..., None, :]
            out[..., k, :2, :2] += (S2 / 4)[..., None, None] * (AdA + np.swapaxes(AdA, -1, -2))
        for k in range(2):          # w derivatives
            wk = wv[..., k]
            dbase = dR * 2 * wk / q ** 2
            out[..., 2 + k, 0, 0] += dbase
            out[..., 2 + k, 1, 1] += dbase
            ww = wv[..., :, None] * wv[..., None, :]
            e = np.zeros(2)
            e[k] = 1.0
            dww = e[:, None] * wv[..., None, :] + wv[..., :, None] * e[None, :]
            out[..., 2 + k, 2:, 2:] += (dQ * dR * 2 * wk)[..., None, None] * ww + Q[..., None, None] * dww
            blk = 0.25 * dc[k][None, :] * A[..., :, None]
            out[..., 2 + k, :2, 2:] += blk
            out[..., 2 + k, 2:, :2] += np.swapaxes(blk, -1, -2)
            out[..., 2 + k, :2, :2] += (wk / 2)[..., None, None] * A[..., :, None] * A[..., None, :]
        return out

    def complex_step(x):
        x = np.asarray(x, float)
        eps = 1e-30
        out = []
        for k in range(4):
            xc = x.astype(complex)
            xc[..., k] += 1j * eps
            out.append(metric(xc).imag / eps)
        return np.stack(out, axis=-3)

    chart_metric = lambda x: metric(np.asarray(x, float))
    chart_metric.complex_step = complex_step

    return MetricChart(4, chart_metric, dmetric, None, None,
                       Domain("bolt", outer=float(zeta_max), end_order=2), name=f"eguchi-hanson-bolt:{a:g}",
                       transition=ChartSwap(bolt_switch_needed, bolt_chart_swap))


BOLT_SWITCH = 2.0


def bolt_switch_needed(x) -> np.ndarray:
    """Paths in a bolt chart move to the companion chart once ``|zeta| > 2``."""
    x = np.asarray(x)
    return x[..., 0] ** 2 + x[..., 1] ** 2 > BOLT_SWITCH ** 2


def bolt_chart_swap(x, v=None):
    """Change between the bolt charts around ``[1:0]`` and ``[0:1]``.

    Exchanging ``z1`` and ``z2`` is an isometry, so both charts use the
    same metric formula; in coordinates ``zeta' = 1/zeta`` and
    ``w' = w zeta / conj(zeta)``.  The map is an involution.
    """
    x = np.asarray(x, float)
    zeta = x[..., 0] + 1j * x[..., 1]
    w = x[..., 2] + 1j * x[..., 3]
    zb = np.conj(zeta)
    zeta2 = 1 / zeta
    w2 = w * zeta / zb
    xo = np.stack([zeta2.real, zeta2.imag, w2.real, w2.imag], axis=-1)
    if v is None:
        return xo
    v = np.asarray(v, float)
    dz = v[..., 0] + 1j * v[..., 1]
    dw = v[..., 2] + 1j * v[..., 3]
    dzeta2 = -dz / zeta ** 2
    dw2 = dw * zeta / zb + w * (dz / zb - zeta * np.conj(dz) / zb ** 2)
    vo = np.stack([dzeta2.real, dzeta2.imag, dw2.real, dw2.imag], axis=-1)
    return xo, vo


def synthetic_decay_chart(n: int, tau: float, C: np.ndarray | None = None,
                          inner: float = 1.0) -> MetricChart:
    """``g = I + |y|^-tau C`` on ``|y| > inner`` for a fixed symmetric ``C``."""
    if C is None:
        C = np.full((n, n), 0.1) + 0.2 * np.eye(n)
        C[0, -1] = C[-1, 0] = -0.15
    C = np.asarray(C, float)
    if np.max(np.abs(C - C.T)) > 0:
        raise ValueError("C must be symmetric")
    u = power_of_radius(-tau)

    def pert(y):
        return u.value(np.asarray(y, float))[..., None, None] * C

    return MetricChart(
        n,
        lambda y: np.eye(n) + pert(y),
        lambda y: u.grad(np.asarray(y, float))[..., :, None, None] * C,
        lambda y: u.hess(np.asarray(y, float))[..., :, :, None, None] * C,
        pert,
        Domain("annulus", inner=float(inner)),
        name=f"synthetic:{n}:{tau:g}",
    )


def conformal_rescale(g: MetricChart, u: ScalarField) -> MetricChart:
    """The chart ``u^-2 g`` with derivatives by the product rule."""

    def factor(y):
        v = u.value(y)
        if np.any(v <= 0):
            raise DegenerateConformalFactor(f"conformal factor {u.name} is not positive")
        return v

    def metric(y):
        return (factor(y) ** -2.0)[..., None, None] * g.metric(y)

    def dmetric(y):
        v = factor(y)
        du = u.grad(y)
        G = g.metric(y)
        dG = g.dmetric(y) if g.dmetric is not None else _fd_first(g.metric, y, g._step(y))
        return (-2 * v ** -3.0)[..., None, None, None] * du[..., :, None, None] * G[..., None, :, :] \
            + (v ** -2.0)[..., None, None, None] * dG

    def d2metric(y):
        v = factor(y)
        du = u.grad(y)
        d2u = u.hess(y)
        G = g.metric(y)
        dG = g.dmetric(y) if g.dmetric is not None else _fd_first(g.metric, y, g._step(y))
        d2G = g.d2g(y)
        t = (6 * v ** -4.0)[..., None, None, None, None] * (du[..., :, None] * du[..., None, :])[..., None, None] \
            * G[..., None, None, :, :]
        t = t - (2 * v ** -3.0)[..., None, None, None, None] * d2u[..., :, :, None, None] * G[..., None, None, :, :]
        t = t - (2 * v ** -3.0)[..., None, None, None, None] * (
            du[..., None, :, None, None] * dG[..., :, None, :, :]
            + du[..., :, None, None, None] * dG[..., None, :, :, :])
        return t + (v ** -2.0)[..., None, None, None, None] * d2G

    pert = None
    if g.perturbation is not None:
        def pert(y):
            v = factor(y)
            w = v ** -2.0
            # u^-2 (I + h) - I, with (u^-2 - 1) formed directly
            return (w - 1)[..., None, None] * np.eye(g.n) + w[..., None, None] * g.perturbation(y)

    return MetricChart(g.n, metric, dmetric, d2metric, pert, g.domain,
                       name=f"rescale:{g.name}:{u.name}", fd_step=g.fd_step)
