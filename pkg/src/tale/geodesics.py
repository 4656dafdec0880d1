"""Geodesic integration: single paths, exponential map, distances, batches.

Single geodesics use scipy's DOP853 with an exit event on the chart
boundary.  Volume computations need thousands of geodesics sampled at
hundreds of fixed times; :func:`integrate_geodesic_batch` advances them
together with one Dormand-Prince 5(4) step sequence and hands
quintic-Hermite interpolants at the requested times to a callback, so no
trajectory is ever stored in full.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from .metrics import DomainError, MetricChart


BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class GeodesicPath:
    """Sampled geodesic.

    Attributes
    ----------
    t : ndarray (m,)
    points, velocities : ndarray (m, n)
    exited : bool
        True if the path left the chart before the requested time; the
        samples then stop at the exit.
    """

    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    exited: bool

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


def geodesic_acceleration(g: MetricChart, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``-Gamma^k_ij v^i v^j`` for batched points and velocities.

    Computed as ``-g^-1 (d_v g v - 1/2 grad(g(v, v)))`` without forming the
    Christoffel array.
    """
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    G = g.metric(x)
    dG = g.dmetric(x) if g.dmetric is not None else g.dg(x)
    Dv = np.matmul(dG, v[..., None, :, None])[..., 0]        # [k, i] = d_k g_ij v^j
    t1 = np.matmul(v[..., None, :], Dv)[..., 0, :]           # sum_k v^k d_k g_mj v^j
    t2 = np.matmul(Dv, v[..., :, None])[..., 0]              # d_m g_ij v^i v^j
    return -np.linalg.solve(G, (t1 - 0.5 * t2)[..., None])[..., 0]


def geodesic_shoot(g: MetricChart, p, v, T: float, rtol: float = 1e-10, atol: float = 1e-12,
                   samples: int = 65) -> GeodesicPath:
    """Integrate the geodesic with ``gamma(0) = p``, ``gamma'(0) = v`` up to time ``T``.

    Uses DOP853 with local error control; a terminal event stops the path
    where it leaves the chart domain.
    """
    p = np.asarray(p, float)
    v = np.asarray(v, float)
    if not g.domain.contains(p):
        raise DomainError("initial point outside the chart")
    n = g.n

    def rhs(_t, s):
        x, w = s[:n], s[n:]
        return np.concatenate([w, geodesic_acceleration(g, x, w)])

    # Some boundaries (the bolt of the Eguchi-Hanson chart) are reached in
    # finite time with vanishing coordinate speed, so the margin approaches
    # zero without changing sign; arriving within BOUNDARY_TOL counts as leaving.
    def leave(_t, s):
        return float(g.domain.margin(s[:n])) - BOUNDARY_TOL

    leave.terminal = True
    leave.direction = -1
    t_eval = np.linspace(0.0, T, samples)
    with np.errstate(invalid="ignore", divide="ignore"):
        sol = solve_ivp(rhs, (0.0, T), np.concatenate([p, v]), method="DOP853", rtol=rtol, atol=atol,
                        t_eval=t_eval, events=leave, dense_output=False)
    exited = sol.status == 1
    t = sol.t
    y = sol.y
    if exited:
        t = np.concatenate([t, sol.t_events[0]])
        y = np.concatenate([y, sol.y_events[0].T], axis=1)
    return GeodesicPath(t, y[:n].T.copy(), y[n:].T.copy(), bool(exited))


def exp_map(g: MetricChart, p, v) -> np.ndarray:
    """``exp_p(v)``; raises :class:`DomainError` if the geodesic leaves the chart."""
    path = geodesic_shoot(g, p, v, 1.0, samples=2)
    if path.exited:
        raise DomainError("geodesic left the chart before time 1")
    return path.end


def speed(g: MetricChart, x, v) -> np.ndarray:
    G = g.metric(np.asarray(x, float))
    return np.sqrt(np.einsum("...i,...ij,...j->...", v, G, v))


def distance_estimate(g: MetricChart, p, q, starts: int = 12, seed: int = 0) -> dict:
    """Approximate Riemannian distance by multi-start shooting.

    Solves ``exp_p(v) = q`` from several initial guesses and returns the
    shortest hit.  No cut-locus analysis is made, so the value is an
    upper estimate of the distance among the geodesics found.

    Returns
    -------
    dict
        ``distance``, ``velocity``, ``residual`` and ``approximate``
        (always True) keys.
    """
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    rng = np.random.default_rng(seed)
    d0 = q - p
    guesses = [d0]
    for _ in range(starts - 1):
        guesses.append(d0 + 0.3 * np.linalg.norm(d0) * rng.normal(size=g.n))

    def resid(v):
        path = geodesic_shoot(g, p, v, 1.0, rtol=1e-10, atol=1e-12, samples=2)
        if path.exited:
            return np.full(g.n, 1e3)
        return path.end - q

    best = None
    for v0 in guesses:
        sol = least_squares(resid, v0, xtol=1e-13, ftol=1e-13, gtol=1e-13)
        if np.linalg.norm(sol.fun) > 1e-7:
            continue
        length = float(speed(g, p, sol.x))
        if best is None or length < best["distance"]:
            best = {"distance": length, "velocity": sol.x, "residual": float(np.linalg.norm(sol.fun)),
                    "approximate": True}
    if best is None:
        raise DomainError("no shooting solution reached the target point")
    return best


# ---------------------------------------------------------------------------
# batch integration

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def _hermite5(s):
    """Quintic Hermite basis (value and d/ds) on [0, 1]."""
    s2, s3, s4, s5 = s * s, s ** 3, s ** 4, s ** 5
    val = np.stack([
        1 - 10 * s3 + 15 * s4 - 6 * s5,
        s - 6 * s3 + 8 * s4 - 3 * s5,
        0.5 * (s2 - 3 * s3 + 3 * s4 - s5),
        10 * s3 - 15 * s4 + 6 * s5,
        -4 * s3 + 7 * s4 - 3 * s5,
        0.5 * (s3 - 2 * s4 + s5),
    ])
    der = np.stack([
        -30 * s2 + 60 * s3 - 30 * s4,
        1 - 18 * s2 + 32 * s3 - 15 * s4,
        0.5 * (2 * s - 9 * s2 + 12 * s3 - 5 * s4),
        30 * s2 - 60 * s3 + 30 * s4,
        -12 * s2 + 28 * s3 - 15 * s4,
        0.5 * (3 * s2 - 8 * s3 + 5 * s4),
    ])
    return val, der


def integrate_geodesic_batch(g: MetricChart, x0, v0, t_nodes, on_nodes, rtol: float = 1e-9,
                             atol: float = 1e-11, h0: float | None = None, max_steps: int = 200_000) -> int:
    """Advance many geodesics together and report them at ``t_nodes``.

    Parameters
    ----------
    x0, v0 : ndarray (B, n)
        Initial points and velocities.
    t_nodes : ndarray
        Increasing output times (all ``> 0``).
    on_nodes : callable
        Called as ``on_nodes(idx, X, V, alive, chart)`` after each accepted
        step with the indices of the output times covered, interpolated
        positions and velocities of shape ``(len(idx), B, n)``, a boolean
        mask of geodesics still inside the chart and, for two-chart
        atlases, the chart index (0 or 1) of every geodesic.
    rtol, atol : float
        Tolerances of the shared step-size control.

    Returns
    -------
    int
        Number of accepted steps.
    """
    x = np.array(x0, float)
    v = np.array(v0, float)
    t_nodes = np.asarray(t_nodes, float)
    B, n = x.shape
    alive = np.asarray(g.domain.contains(x), bool).copy()
    chart = np.zeros(B, dtype=np.int8)

    def accel(xx, vv, mask):
        out = np.zeros_like(vv)
        if np.any(mask):
            with np.errstate(all="ignore"):
                out[mask] = geodesic_acceleration(g, xx[mask], vv[mask])
        return out

    a = accel(x, v, alive)
    t = 0.0
    T = float(t_nodes[-1])
    h = h0 if h0 is not None else min(0.01 * T, 0.05)
    next_node = 0
    steps = 0
    while next_node < len(t_nodes) and steps < max_steps:
        h = min(h, T - t)
        if h <= 1e-14 * max(T, 1.0):
            h = T - t
        kx = [v]
        kv = [a]
        for i in range(1, 6):
            xs = x + h * sum(c * k for c, k in zip(_A[i], kx))
            vs = v + h * sum(c * k for c, k in zip(_A[i], kv))
            kx.append(vs)
            kv.append(accel(xs, vs, alive))
        x1 = x + h * sum(b * k for b, k in zip(_B, kx))
        v1 = v + h * sum(b * k for b, k in zip(_B, kv))
        a1 = accel(x1, v1, alive)
        kx.append(v1)
        kv.append(a1)
        ex = h * sum(e * k for e, k in zip(_E, kx))
        ev = h * sum(e * k for e, k in zip(_E, kv))
        sx = atol + rtol * np.maximum(np.abs(x), np.abs(x1))
        sv = atol + rtol * np.maximum(np.abs(v), np.abs(v1))
        per = np.sqrt(0.5 * (np.mean((ex / sx) ** 2, axis=1) + np.mean((ev / sv) ** 2, axis=1)))
        per = np.where(alive, per, 0.0)
        bad = ~np.isfinite(per)
        if np.any(bad & alive):
            # a trial stage left the region where the metric is defined:
            # shrink, unless the step is already tiny (then retire those paths)
            if h > 1e-10 * max(T, 1.0):
                h *= 0.25
                continue
            alive = alive & ~bad
            per = np.where(bad, 0.0, per)
        err = float(np.max(per)) if per.size else 0.0
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        t1 = t + h
        hi = np.searchsorted(t_nodes, t1 + 1e-15 * max(T, 1.0), side="right")
        if hi > next_node:
            idx = np.arange(next_node, hi)
            s = (t_nodes[idx] - t) / h
            val, der = _hermite5(s)
            coeff = [x, h * v, h * h * a, x1, h * v1, h * h * a1]
            X = sum(val[j][:, None, None] * coeff[j][None] for j in range(6))
            V = sum(der[j][:, None, None] * coeff[j][None] for j in range(6)) / h
            inside = g.domain.contains(X) & alive[None, :]
            on_nodes(idx, X, V, inside, chart.copy())
            next_node = hi
        x, v, a, t = x1, v1, a1, t1
        if g.transition is not None:
            sw = alive & g.transition.needed(x)
            if np.any(sw):
                x[sw], v[sw] = g.transition.apply(x[sw], v[sw])
                chart[sw] ^= 1
                a[sw] = accel(x[sw], v[sw], np.ones(int(sw.sum()), bool))
        new_alive = alive & g.domain.contains(x) & np.all(np.isfinite(x), axis=1)
        if np.any(new_alive != alive):
            alive = new_alive
            a = accel(x, v, alive)
        steps += 1
        h *= min(5.0, 0.9 * max(err, 1e-10) ** -0.2)
    if next_node < len(t_nodes):
        raise RuntimeError("batch geodesic integration exceeded the step budget")
    return steps
