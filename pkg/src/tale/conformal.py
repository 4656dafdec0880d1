"""Coordinate inversion of asymptotically flat ends and the one-point completion.

For an end with coordinates ``y`` on ``|y| > R`` and metric ``g = I + h``,
the inversion ``z = y / |y|^2`` together with the conformal factor
``|y|^-4`` turns the end into a punctured ball ``0 < |z| < 1/R``.  The
rescaled metric there is

    gbar_ij(z) = d_ij + h_ij - (2/|z|^2) (z_i (z.h)_j + z_j (h.z)_i)
                 + (4/|z|^4) z_i z_j (z.h.z)

with ``h`` evaluated at ``y = z / |z|^2``.  Decay of ``h`` like
``|y|^-tau`` becomes vanishing of ``gbar - I`` like ``|z|^tau`` at the
added point.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import factorial, floor

import numpy as np
from scipy.stats import norm, qmc

from .groups import FiniteRotationGroup
from .metrics import Domain, DomainError, MetricChart


class InsufficientData(ValueError):
    """Raised when a decay fit has too few radii."""


class HypothesisViolated(ValueError):
    """Raised when the completion is requested for an end of too low order."""


# ---------------------------------------------------------------------------
# inversion


def invert_point(y) -> np.ndarray:
    """``z = y / |y|^2`` (an involution of R^n minus the origin)."""
    y = np.asarray(y, float)
    s = np.sum(y * y, axis=-1, keepdims=True)
    if np.any(s == 0):
        raise DomainError("inversion is undefined at the origin")
    return y / s


def invert_jacobian(y) -> np.ndarray:
    """``dz/dy = (I - 2 yhat yhat^T) / |y|^2`` at ``y``."""
    y = np.asarray(y, float)
    s = np.sum(y * y, axis=-1)
    if np.any(s == 0):
        raise DomainError("inversion is undefined at the origin")
    n = y.shape[-1]
    yy = y[..., :, None] * y[..., None, :] / s[..., None, None]
    return (np.eye(n) - 2 * yy) / s[..., None, None]


def coordinate_vectors_in_y(z) -> np.ndarray:
    """Matrix ``M`` with ``d/dz_i = sum_j M_ij d/dy_j`` at ``z``.

    Since the inversion is an involution, ``M = dy/dz`` transposed, i.e.
    ``(I - 2 zhat zhat^T) / |z|^2``.
    """
    return np.swapaxes(invert_jacobian(z), -1, -2)


def _reflection_form(h: np.ndarray, z: np.ndarray) -> np.ndarray:
    """The displayed three-term expression for ``gbar - I``."""
    s = np.sum(z * z, axis=-1)
    hz = np.einsum("...ij,...j->...i", h, z)       # (h z)_i = sum_k h_ik z_k
    zhz = np.einsum("...i,...i->...", z, hz)
    term2 = z[..., :, None] * hz[..., None, :] + hz[..., :, None] * z[..., None, :]
    term3 = z[..., :, None] * z[..., None, :] * zhz[..., None, None]
    return h - (2 / s)[..., None, None] * term2 + (4 / s ** 2)[..., None, None] * term3


def pushforward_inverted_metric(g: MetricChart, R: float | None = None) -> MetricChart:
    """The metric ``|y|^-4 g`` written in the inverted coordinate ``z``.

    Parameters
    ----------
    g : MetricChart
        Chart of an end, ``|y| > R``.
    R : float, optional
        Inner radius of the end; defaults to the chart's inner radius.

    Returns
    -------
    MetricChart
        Chart on ``0 < |z| < 1/R``.  The metric is the three-term formula
        of the module docstring; first derivatives use the equivalent form
        ``P h P`` with the reflection ``P = I - 2 zhat zhat^T``.  The deck
        group of ``g`` is carried over.
    """
    R = float(g.domain.inner if R is None else R)
    if R <= 0 or R < g.domain.inner:
        raise DomainError("the end must be |y| > R with R inside the chart")
    n = g.n
    pert = g.perturbation if g.perturbation is not None else (lambda y: g.metric(y) - np.eye(n))

    def H(z):
        z = np.asarray(z, float)
        s = np.sum(z * z, axis=-1)
        out = np.zeros(z.shape[:-1] + (n, n))
        nz = s > 0
        if np.any(nz):
            zz = z[nz]
            y = zz / s[nz][..., None]
            out[nz] = _reflection_form(pert(y), zz)
        return out

    def metric(z):
        return np.eye(n) + H(z)

    def dmetric(z):
        z = np.asarray(z, float)
        s = np.sum(z * z, axis=-1)
        out = np.zeros(z.shape[:-1] + (n, n, n))
        nz = s > 0
        if not np.any(nz):
            return out
        zz = z[nz]
        r = np.sqrt(s[nz])
        y = zz / s[nz][..., None]
        nh = zz / r[..., None]
        h = pert(y)
        dh_y = g.dmetric(y) if g.dmetric is not None else g.dg(y)   # [k, i, j] in y
        dy_dz = invert_jacobian(zz)                                   # symmetric
        dh = np.einsum("...km,...kij->...mij", dy_dz, dh_y)          # d/dz_m
        P = np.eye(n) - 2 * nh[..., :, None] * nh[..., None, :]
        dn = (np.eye(n) - nh[..., :, None] * nh[..., None, :]) / r[..., None, None]   # [i, m]
        dnT = np.swapaxes(dn, -1, -2)                                 # [m, i]
        dP = -2 * (dnT[..., :, :, None] * nh[..., None, None, :] + nh[..., None, :, None] * dnT[..., :, None, :])
        hP = h @ P
        res = np.einsum("...mij,...jk->...mik", dP, hP)
        res = res + np.einsum("...ij,...mjk,...kl->...mil", P, dh, P)
        res = res + np.einsum("...ij,...mjk->...mik", P @ h, dP)
        out[nz] = res
        return out

    dom = Domain("punctured_ball", inner=0.0, outer=1.0 / R, deck=g.domain.deck,
                 added_point=False, end_order=g.domain.deck_order)
    return MetricChart(n, metric, dmetric, None, H, dom, name=f"inverted:{g.name}")


def pullback_oracle(g_at_y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``|y|^-4 (dy/dz)^T g(y) (dy/dz)`` at ``y = z/|z|^2``, from first principles."""
    y = invert_point(z)
    Jz = invert_jacobian(z)      # dy/dz (the inversion is its own inverse)
    rho = np.linalg.norm(y, axis=-1)
    return (rho ** -4)[..., None, None] * np.einsum("...ki,...kl,...lj->...ij", Jz, g_at_y, Jz)


# ---------------------------------------------------------------------------
# derivative sampling along lines


def central_weights(order: int, half_width: int = 4) -> np.ndarray:
    """Weights of the centred ``2 m + 1`` point stencil for the ``order``-th derivative."""
    m = half_width
    offs = np.arange(-m, m + 1, dtype=float)
    V = np.vander(offs, 2 * m + 1, increasing=True).T
    rhs = np.zeros(2 * m + 1)
    rhs[order] = factorial(order)
    return np.linalg.solve(V, rhs)


def line_derivatives(f, y: np.ndarray, u: np.ndarray, h: np.ndarray, kmax: int) -> list[np.ndarray]:
    """``d^k/dt^k f(y + t u)`` at ``t = 0`` for ``k = 0..kmax`` from one 9-point stencil.

    ``y``, ``u`` have shape ``(B, n)``, ``h`` shape ``(B,)``.
    """
    offs = np.arange(-4, 5)
    pts = y[None] + offs[:, None, None] * (h[None, :, None] * u[None])
    vals = f(pts.reshape(-1, y.shape[-1])).reshape((9,) + y.shape[:1] + f(y[:1]).shape[1:])
    out = []
    for k in range(kmax + 1):
        if k == 0:
            out.append(vals[4])
            continue
        w = central_weights(k)
        d = np.tensordot(w, vals, axes=(0, 0))
        out.append(d / h.reshape((-1,) + (1,) * (d.ndim - 1)) ** k)
    return out


def sphere_samples(n: int, count: int, seed: int) -> np.ndarray:
    sob = qmc.Sobol(d=n, scramble=True, seed=seed)
    z = norm.ppf(np.clip(sob.random(count), 1e-12, 1 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def derivative_sup_norms(f, n: int, radii, kmax: int, directions: int = 64, seed: int = 0,
                         rel_step: float = 0.05) -> np.ndarray:
    """Sup over sampled points of ``|d^k f|`` on the spheres ``|y| = rho``.

    The k-th derivative tensor is sampled through directional derivatives
    along the radial direction and the coordinate axes; the result has
    shape ``(len(radii), kmax + 1)``.
    """
    omegas = sphere_samples(n, directions, seed)
    out = np.zeros((len(radii), kmax + 1))
    for i, rho in enumerate(radii):
        y = rho * omegas
        best = np.zeros(kmax + 1)
        for u in [omegas] + [np.broadcast_to(e, omegas.shape) for e in np.eye(n)]:
            ders = line_derivatives(f, y, np.ascontiguousarray(u), np.full(len(y), rel_step * rho), kmax)
            for k, d in enumerate(ders):
                best[k] = max(best[k], float(np.max(np.abs(d))))
        out[i] = best
    return out


def _loglog_fit(radii, values):
    x = np.log(np.asarray(radii, float))
    yv = np.log(np.asarray(values, float))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, yv, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((yv - pred) ** 2))
    ss_tot = float(np.sum((yv - yv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


# ---------------------------------------------------------------------------
# ALE order


@dataclass(frozen=True)
class ALEDescriptor:
    """Decay data of an asymptotically flat end.

    Attributes
    ----------
    tau : float
        Decay order of ``g - I`` (``inf`` when no decay is measurable
        because the end is exactly flat).
    mu : int
        Number of derivative orders with the matching decay ``tau + k``.
    R : float
        Inner radius of the end.
    group : FiniteRotationGroup or None
        Group at infinity.
    per_k : list of dict
        Fitted slopes ``{k, slope, r2}`` when estimated.
    low_confidence : bool
        Set when sampled norms are not monotone in the radius.
    """

    tau: float
    mu: int
    R: float
    group: FiniteRotationGroup | None = None
    per_k: list = field(default_factory=list)
    low_confidence: bool = False

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if not self.R > 0:
            raise ValueError("R must be positive")


NORM_FLOOR = 1e-300


def estimate_ale_order(g: MetricChart, radii, kmax: int = 3, directions: int = 64, seed: int = 0,
                       tol: float = 0.3) -> ALEDescriptor:
    """Fit decay exponents of ``d^k (g - I)`` against the radius.

    ``tau`` is minus the slope at ``k = 0``; ``mu`` is the largest ``k``
    such that every slope up to ``k`` equals ``-tau - k`` within ``tol``.
    """
    radii = np.asarray(radii, float)
    if len(radii) < 4:
        raise InsufficientData("at least 4 radii are needed for a decay fit")
    pert = g.perturbation if g.perturbation is not None else (lambda y: g.metric(y) - np.eye(g.n))
    norms = derivative_sup_norms(pert, g.n, radii, kmax, directions, seed)
    R = float(radii.min())
    if np.all(norms < 1e-14):
        per_k = [{"k": k, "slope": None, "r2": None} for k in range(kmax + 1)]
        return ALEDescriptor(np.inf, kmax, R, g.domain.deck, per_k, False)
    per_k = []
    slopes = []
    for k in range(kmax + 1):
        s, r2 = _loglog_fit(radii, np.maximum(norms[:, k], NORM_FLOOR))
        slopes.append(s)
        per_k.append({"k": k, "slope": s, "r2": r2})
    tau = -slopes[0]
    mu = -1
    for k, s in enumerate(slopes):
        if abs(s + tau + k) <= tol:
            mu = k
        else:
            break
    diffs = np.diff(norms, axis=0)
    low = bool(np.any(diffs > 0)) if radii[0] < radii[-1] else False
    return ALEDescriptor(float(tau), max(mu, 0), R, g.domain.deck, per_k, low)


# ---------------------------------------------------------------------------
# completion


@dataclass
class RegularityReport:
    """Behaviour of ``gbar - I`` and its derivatives near the added point.

    Attributes
    ----------
    radii : ndarray
        Radii ``|z|`` of the sampled spheres (decreasing).
    sup_norms : ndarray (len(radii), K+1)
        Sampled sup-norms of ``d^k (gbar - I)``.
    exponents : list of float
        Fitted exponents ``e_k`` of ``sup |d^k(gbar - I)| ~ |z|^e_k``.
    bounded, continuous : list of bool
        Per order: samples stay bounded (``e_k > -tol``) or tend to zero
        (``e_k > vanish``), the latter meaning the derivative extends
        continuously by zero.
    order : int or None
        Largest ``m`` with continuous derivatives through order ``m``,
        capped at ``floor(tau) - 1``; None when all samples vanish.
    failure_order : int or None
        First probed order that does not extend continuously.
    verdict : str
    """

    radii: np.ndarray
    sup_norms: np.ndarray
    exponents: list
    bounded: list
    continuous: list
    order: int | None
    failure_order: int | None
    verdict: str

    def as_dict(self) -> dict:
        return {
            "radii": [float(r) for r in self.radii],
            "exponents": [None if e is None else float(e) for e in self.exponents],
            "bounded": list(self.bounded),
            "continuous": list(self.continuous),
            "order": self.order,
            "failure_order": self.failure_order,
            "verdict": self.verdict,
        }


def regularity_probe(chart: MetricChart, radii, K: int, tau: float, directions: int = 64, seed: int = 0,
                     tol: float = 0.3, vanish: float = 0.5) -> RegularityReport:
    """Sample ``d^k (gbar - I)`` for ``k <= K`` on spheres shrinking to the origin."""
    radii = np.asarray(radii, float)
    norms = derivative_sup_norms(chart.perturbation, chart.n, radii, K, directions, seed)
    if np.all(norms < 1e-14):
        return RegularityReport(radii, norms, [None] * (K + 1), [True] * (K + 1), [True] * (K + 1),
                                None, None, "C-infinity-compatible: all sampled derivatives vanish")
    exps, bounded, cont = [], [], []
    for k in range(K + 1):
        col = norms[:, k]
        if np.all(col < 1e-14 * max(norms.max(), 1.0)):
            exps.append(None)
            bounded.append(True)
            cont.append(True)
            continue
        e, _ = _loglog_fit(radii, np.maximum(col, NORM_FLOOR))
        exps.append(e)
        bounded.append(e > -tol)
        cont.append(e > vanish)
    failure = next((k for k, c in enumerate(cont) if not c), None)
    top = K if failure is None else failure - 1
    cap = int(floor(tau)) - 1 if np.isfinite(tau) else top
    order = min(top, cap)
    verdict = f"C^{order}-consistent"
    if failure is not None:
        verdict += f"; derivatives of order {failure} do not extend continuously"
    return RegularityReport(radii, norms, exps, bounded, cont, order, failure, verdict)


def compactify(g: MetricChart, desc: ALEDescriptor, levels=range(3, 9), directions: int = 64,
               seed: int = 0, snap: float = 0.05) -> tuple[MetricChart, RegularityReport]:
    """One-point completion of an end by inversion.

    Requires ``mu >= tau - 1 >= 2``.  The returned chart is the inverted
    metric on the ball ``|z| < 1/R`` with the origin added (carrying the
    deck group of ``g`` as its isotropy group); the report samples
    ``|z| = 2^-j / R`` for ``j`` in ``levels`` and probes derivative orders
    up to ``floor(tau)``, one beyond the order claimed continuous.

    A fitted ``tau`` within ``snap`` of an integer is treated as that
    integer, so that regression noise does not move ``floor(tau)``.
    """
    finite = np.isfinite(desc.tau)
    tau = desc.tau
    if finite and abs(tau - round(tau)) <= snap:
        tau = float(round(tau))
    if finite and not (desc.mu >= tau - 1 >= 2):
        raise HypothesisViolated(
            f"completion needs mu >= tau - 1 >= 2, got tau = {desc.tau:g}, mu = {desc.mu}")
    if not finite and desc.mu < 2:
        raise HypothesisViolated("completion needs at least two controlled derivative orders")
    chart = pushforward_inverted_metric(g, desc.R)
    chart = replace(chart, domain=replace(chart.domain, added_point=True), name=f"compactified:{g.name}")
    radii = np.array([2.0 ** -j / desc.R for j in levels])
    K = int(floor(tau)) if finite else 3
    report = regularity_probe(chart, radii, K, tau, directions, seed)
    return chart, report
