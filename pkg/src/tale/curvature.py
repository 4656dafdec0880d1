"""Christoffel symbols, Riemann, Ricci and scalar curvature at a point.

Conventions: ``R(X, Y) Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``
with components ``R(d_i, d_j) d_k = R^l_kij d_l``; ``Ric(X, Y)`` is the
trace of ``Z -> R(Z, X) Y``, so the unit round sphere has ``Ric = (n-1) g``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import MetricChart


@dataclass(frozen=True)
class CurvatureBundle:
    """Curvature data at one point, in coordinate components.

    Attributes
    ----------
    metric : ndarray (n, n)
    christoffel : ndarray (n, n, n)
        ``[k, i, j] = Gamma^k_ij``.
    riemann : ndarray (n, n, n, n)
        Fully covariant ``[l, k, i, j] = g_lm R^m_kij``; antisymmetric in
        ``(l, k)`` and in ``(i, j)``.
    ricci : ndarray (n, n)
        ``Ric_jk``.
    ricci_endo : ndarray (n, n)
        ``g^-1 Ric``, the Ricci endomorphism.
    scalar : float
    """

    metric: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    ricci_endo: np.ndarray
    scalar: float

    def symmetry_defects(self) -> dict:
        """Violations of the algebraic Riemann symmetries, relative to its size."""
        R = self.riemann
        size = max(float(np.max(np.abs(R))), 1e-300)
        bianchi = R + np.einsum("lkij->lijk", R) + np.einsum("lkij->ljki", R)
        return {
            "antisym_first": float(np.max(np.abs(R + np.swapaxes(R, 0, 1)))) / size,
            "antisym_last": float(np.max(np.abs(R + np.swapaxes(R, 2, 3)))) / size,
            "pair": float(np.max(np.abs(R - np.einsum("lkij->ijlk", R)))) / size,
            "bianchi": float(np.max(np.abs(bianchi))) / size,
            "trace": abs(float(np.trace(self.ricci_endo)) - self.scalar) / max(abs(self.scalar), 1.0),
        }


def curvature_arrays(g: MetricChart, y):
    """Batched curvature: returns ``(G, Gamma, Rm_up, Ric, s)`` over leading axes.

    ``Rm_up[..., l, k, i, j] = R^l_kij``.
    """
    y = np.asarray(y, float)
    G = g.g(y)
    dG = g.dg(y)
    d2G = g.d2g(y)
    ginv = np.linalg.inv(G)
    # first-kind symbols and their derivatives: [m, j, k] = 1/2(d_j g_mk + d_k g_mj - d_m g_jk)
    first = 0.5 * (np.einsum("...jmk->...mjk", dG) + np.einsum("...kmj->...mjk", dG) - dG)
    dfirst = 0.5 * (np.einsum("...ijmk->...imjk", d2G) + np.einsum("...ikmj->...imjk", d2G)
                    - d2G)
    Gam = np.einsum("...lm,...mjk->...ljk", ginv, first)
    dginv = -np.einsum("...la,...iab,...bm->...ilm", ginv, dG, ginv)
    # [i, l, j, k] = d_i Gamma^l_jk
    dGam = np.einsum("...ilm,...mjk->...iljk", dginv, first) + np.einsum("...lm,...imjk->...iljk", ginv, dfirst)
    # R^l_kij = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    t1 = np.einsum("...iljk->...lkij", dGam)
    t2 = np.einsum("...jlik->...lkij", dGam)
    t3 = np.einsum("...lim,...mjk->...lkij", Gam, Gam)
    t4 = np.einsum("...ljm,...mik->...lkij", Gam, Gam)
    Rup = t1 - t2 + t3 - t4
    Ric = np.einsum("...ikij->...jk", Rup)
    Ric = 0.5 * (Ric + np.swapaxes(Ric, -1, -2))
    s = np.einsum("...jk,...jk->...", ginv, Ric)
    return G, Gam, Rup, Ric, s


def curvature_at(g: MetricChart, p) -> CurvatureBundle:
    """All curvature objects of ``g`` at the point ``p``."""
    p = np.asarray(p, float)
    G, Gam, Rup, Ric, s = curvature_arrays(g, p)
    Rm = np.einsum("lm,mkij->lkij", G, Rup)
    return CurvatureBundle(G, Gam, Rm, Ric, np.linalg.solve(G, Ric), float(s))
