"""Geodesic ball volumes and the Bishop ratio ``psi(r) = vol B(p, r) / (omega_n r^n)``.

Volumes are computed in polar coordinates around ``p``: for each of a set
of quasi-random unit directions ``theta`` the radial density
``J(theta, t)`` (the Jacobian of ``(t, theta) -> exp_p(t theta)``) is
obtained by finite differences of neighbouring geodesics, integrated in
``t`` with Simpson's rule, and averaged over directions.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np
from scipy.integrate import simpson
from scipy.stats import norm, qmc

from .geodesics import integrate_geodesic_batch
from .metrics import DomainError, MetricChart

RADIAL_PANELS = 128
FD_EPS = 1e-6
FD_FLOOR = 1e-9  # relative resolution of the finite-difference Jacobian
CONJUGATE_FRACTION = 0.01


def unit_ball_volume(n: int) -> float:
    return pi ** (n / 2) / gamma(n / 2 + 1)


def unit_sphere_area(n: int) -> float:
    """Area of the unit sphere S^(n-1) in R^n."""
    return 2 * pi ** (n / 2) / gamma(n / 2)


def sphere_directions(n: int, count: int, seed: int) -> np.ndarray:
    """Low-discrepancy unit vectors: scrambled Sobol points pushed through the
    Gaussian quantile and normalized."""
    sob = qmc.Sobol(d=n, scramble=True, seed=seed)
    u = sob.random(count)
    z = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _complete_basis(u: np.ndarray) -> np.ndarray:
    """Positively oriented orthonormal bases whose first vector is ``u``.

    Returns shape ``(B, n, n)`` with columns ``u, w_1, ..., w_{n-1}``.
    """
    B, n = u.shape
    out = np.empty((B, n, n))
    for b in range(B):
        M = np.column_stack([u[b], np.eye(n)])
        Q, _ = np.linalg.qr(M)
        Q = Q[:, :n]
        if Q[:, 0] @ u[b] < 0:
            Q[:, 0] *= -1
        if np.linalg.det(Q) < 0:
            Q[:, -1] *= -1
        out[b] = Q
    return out


def orthonormal_frame(g: MetricChart, p) -> np.ndarray:
    """Gram-Schmidt frame of the coordinate basis at ``p`` (columns)."""
    L = np.linalg.cholesky(g.g(p))
    return np.linalg.inv(L).T


@dataclass
class RadialProfile:
    """Radial densities ``J`` for a set of directions at common times."""

    times: np.ndarray
    J: np.ndarray           # (directions, times), zero after truncation
    stop_index: np.ndarray  # first node index that was cut (len(times) if none)
    exited: np.ndarray      # truncation caused by leaving the chart
    conjugate: np.ndarray   # truncation caused by a sign change of J


def _profile_chunk(g: MetricChart, p: np.ndarray, E: np.ndarray, dirs: np.ndarray,
                   times: np.ndarray, rtol: float) -> RadialProfile:
    B, n = dirs.shape
    basis = _complete_basis(dirs)                 # Euclidean orthonormal
    coord = np.einsum("ij,bjk->bik", E, basis)    # g-orthonormal at p
    theta = coord[:, :, 0]
    vel = [theta] + [theta + FD_EPS * coord[:, :, k] for k in range(1, n)]
    v0 = np.concatenate(vel, axis=0)
    x0 = np.broadcast_to(p, v0.shape).copy()
    J = np.zeros((B, len(times)))
    ok = np.ones((B, len(times)), bool)

    def on_nodes(idx, X, V, alive, chart):
        if g.transition is not None:
            # express the neighbouring geodesics in the chart of the central one
            c = chart.reshape(n, B)
            X = X.copy()
            for k in range(1, n):
                other = c[k] != c[0]
                if np.any(other):
                    sl = np.arange(k * B, (k + 1) * B)[other]
                    X[:, sl] = g.transition.apply(X[:, sl])
        X0 = X[:, :B]
        cols = [V[:, :B]] + [(X[:, k * B:(k + 1) * B] - X0) / FD_EPS for k in range(1, n)]
        M = np.stack(cols, axis=-1)
        with np.errstate(all="ignore"):
            dens = np.linalg.det(M) * np.sqrt(np.linalg.det(g.metric(X0)))
        good = np.all(alive.reshape(len(idx), n, B), axis=1) & np.isfinite(dens)
        J[:, idx] = np.where(good, dens, 0.0).T
        ok[:, idx] = good.T

    integrate_geodesic_batch(g, x0, v0, times, on_nodes, rtol=rtol)
    exited = ~ok
    first_exit = np.where(exited.any(axis=1), exited.argmax(axis=1), len(times))
    nonpos = (J <= 0) & ok
    first_conj = np.where(nonpos.any(axis=1), nonpos.argmax(axis=1), len(times))
    stop = np.minimum(first_exit, first_conj)
    mask = np.arange(len(times))[None, :] >= stop[:, None]
    J = np.where(mask, 0.0, J)
    return RadialProfile(times, J, stop, first_exit <= first_conj, first_conj < first_exit)


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("TALE_THREADS", "1")))
    except ValueError:
        return 1


def radial_profile(g: MetricChart, p, dirs: np.ndarray, times: np.ndarray, rtol: float = 1e-9,
                   chunk: int = 1024) -> RadialProfile:
    """Radial densities along ``dirs`` (Euclidean unit vectors mapped through the
    frame at ``p``) at the increasing ``times``.

    Work is split into fixed chunks of directions, so the result does not
    depend on the number of worker threads (``TALE_THREADS``).
    """
    p = np.asarray(p, float)
    if not g.domain.contains(p):
        raise DomainError("base point outside the chart")
    E = orthonormal_frame(g, p)
    parts = [dirs[i:i + chunk] for i in range(0, len(dirs), chunk)]
    workers = min(_worker_count(), len(parts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            profs = list(pool.map(lambda d: _profile_chunk(g, p, E, d, times, rtol), parts))
    else:
        profs = [_profile_chunk(g, p, E, d, times, rtol) for d in parts]
    return RadialProfile(times, np.concatenate([q.J for q in profs]),
                         np.concatenate([q.stop_index for q in profs]),
                         np.concatenate([q.exited for q in profs]),
                         np.concatenate([q.conjugate for q in profs]))


def exp_jacobian(g: MetricChart, p, theta, t) -> float:
    """Polar volume density ``J(theta, t)`` of the exponential map at ``p``.

    ``theta`` is a unit vector in the orthonormal frame at ``p``.  The
    normalization makes flat space give ``t^(n-1)``.  A non-positive value
    signals a conjugate point.
    """
    theta = np.asarray(theta, float)
    theta = theta / np.linalg.norm(theta)
    ts = np.atleast_1d(np.asarray(t, float))
    prof = _profile_chunk(g, np.asarray(p, float), orthonormal_frame(g, p), theta[None, :], ts, 1e-11)
    if prof.exited[0] and prof.stop_index[0] < len(ts):
        raise DomainError("geodesic left the chart before time t")
    return float(prof.J[0, -1]) if np.ndim(t) == 0 else prof.J[0]


def _simpson_nodes(r: float) -> np.ndarray:
    return np.linspace(0.0, r, RADIAL_PANELS + 1)


@dataclass
class BallVolume:
    volume: float
    stderr: float
    flags: list = field(default_factory=list)


def _volumes_from_profile(g, p, prof: RadialProfile, radii, node_index) -> list[BallVolume]:
    n = g.n
    area = unit_sphere_area(n)
    stab = g.domain.stabilizer_order(p)
    out = []
    N = prof.J.shape[0]
    for r, idx in zip(radii, node_index):
        t = _simpson_nodes(r)
        vals = np.zeros((N, len(t)))
        vals[:, 1:] = prof.J[:, idx]
        fine = simpson(vals, x=t, axis=1)
        coarse = simpson(vals[:, ::2], x=t[::2], axis=1)
        vol = area * float(np.mean(fine)) / stab
        sampling = area * float(np.std(fine, ddof=1)) / np.sqrt(N) / stab if N > 1 else 0.0
        quad = area * abs(float(np.mean(fine - coarse))) / 15 / stab
        se = float(np.sqrt(sampling ** 2 + quad ** 2 + (FD_FLOOR * vol) ** 2))
        cut = prof.stop_index <= idx[-1]
        flags = []
        if np.any(cut & prof.exited):
            flags.append("truncated")
        if np.mean(cut & prof.conjugate) > CONJUGATE_FRACTION:
            flags.append("approximate")
        out.append(BallVolume(vol, max(se, np.finfo(float).tiny), flags))
    return out


def _profile_for_radii(g, p, radii, samples, seed, rtol):
    radii = np.asarray(radii, float)
    if np.any(np.diff(radii) <= 0) or np.any(radii <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    nodes = np.unique(np.concatenate([_simpson_nodes(r)[1:] for r in radii]))
    node_index = [np.searchsorted(nodes, _simpson_nodes(r)[1:]) for r in radii]
    dirs = sphere_directions(g.n, samples, seed)
    prof = radial_profile(g, p, dirs, nodes, rtol=rtol)
    return prof, node_index


def ball_volume(g: MetricChart, p, r: float, samples: int = 4096, seed: int = 0x5EED,
                rtol: float = 1e-9) -> BallVolume:
    """Volume of the geodesic ball ``B(p, r)`` with a standard error.

    For a chart with a deck group the volume is divided by the order of the
    stabilizer of ``p`` (the isotropy group at ``p``).
    """
    prof, idx = _profile_for_radii(g, p, [r], samples, seed, rtol)
    return _volumes_from_profile(g, p, prof, [r], idx)[0]


@dataclass
class VolumeRatioTable:
    """Sampled Bishop ratio ``psi(r)`` with Monte-Carlo standard errors."""

    point: np.ndarray
    radii: np.ndarray
    psi: np.ndarray
    stderr: np.ndarray
    samples: int
    order_at_point: int
    order_at_infinity: int
    flags: list

    def rows(self) -> list[dict]:
        return [{"r": float(r), "psi": float(v), "stderr": float(s), "flags": ";".join(f)}
                for r, v, s, f in zip(self.radii, self.psi, self.stderr, self.flags)]


def psi_table(g: MetricChart, p, radii, samples: int = 4096, seed: int = 0x5EED,
              rtol: float = 1e-9) -> VolumeRatioTable:
    """Bishop ratios at the given radii from one shared set of geodesics.

    A ``rigid`` flag marks radii where ``psi`` equals ``1/#Gamma_p`` within
    two standard errors, the equality case in which the ball is
    isometric to a flat quotient ball (a numerical diagnostic only).
    """
    p = np.asarray(p, float)
    radii = np.asarray(radii, float)
    prof, idx = _profile_for_radii(g, p, radii, samples, seed, rtol)
    vols = _volumes_from_profile(g, p, prof, radii, idx)
    wn = unit_ball_volume(g.n)
    psi = np.array([b.volume / (wn * r ** g.n) for b, r in zip(vols, radii)])
    se = np.array([b.stderr / (wn * r ** g.n) for b, r in zip(vols, radii)])
    order_p = g.domain.stabilizer_order(p)
    flags = []
    for b, v, s in zip(vols, psi, se):
        f = list(b.flags)
        if abs(v - 1.0 / order_p) <= 2 * s:
            f.append("rigid")
        flags.append(f)
    return VolumeRatioTable(p, radii, psi, se, samples, order_p, g.domain.order_at_infinity(), flags)


def check_monotone(table: VolumeRatioTable, slack: float = 2.0) -> dict:
    """Non-increase of ``psi`` up to ``slack`` combined standard errors."""
    bad = []
    for i in range(len(table.radii) - 1):
        tol = slack * np.hypot(table.stderr[i], table.stderr[i + 1])
        if table.psi[i + 1] > table.psi[i] + tol:
            bad.append({"r0": float(table.radii[i]), "r1": float(table.radii[i + 1]),
                        "increase": float(table.psi[i + 1] - table.psi[i]), "allowed": float(tol)})
    return {"monotone": not bad, "violations": bad}


def check_zero_sum_bound(orders) -> dict:
    """Volume admissibility of zeros with isotropy orders ``#Gamma_{p_i}``.

    A configuration is admissible when ``sum 1/#Gamma_{p_i} <= 1``; in
    particular a smooth zero (order 1) can only occur alone.
    """
    orders = [int(o) for o in orders]
    if any(o < 1 for o in orders):
        raise ValueError("group orders must be positive integers")
    total = sum(1.0 / o for o in orders)
    admissible = total <= 1.0 + 1e-12
    return {
        "orders": orders,
        "sum": total,
        "admissible": admissible,
        "smooth_zero_unique": (1 not in orders) or len(orders) == 1,
    }
